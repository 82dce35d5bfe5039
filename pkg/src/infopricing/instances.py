"""Reference instances and seeded random generators."""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np

from .core import ValueDistribution

HORIZONTAL_EPS = 1e-6


def _dist(points, prob, name, **meta) -> ValueDistribution:
    prob = np.asarray(prob, dtype=float)
    prob = prob / prob.sum()
    return ValueDistribution(np.asarray(points, dtype=float), prob, name=name, meta=meta)


def _check_eps(eps: float) -> None:
    if not 0 < eps < 1:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")


def example_complex_info() -> ValueDistribution:
    return _dist([[10, 5], [6, 5], [0, 3]], [0.2, 0.4, 0.4], "ex1", family="builtin")


def example_lottery_opt() -> ValueDistribution:
    return _dist([[0, 20, 9], [4, 0, 5]], [0.5, 0.5], "ex2", family="builtin")


def appendix_pricing_subopt() -> ValueDistribution:
    """Same instance as :func:`example_lottery_opt`, kept under its own id."""
    return _dist([[0, 20, 9], [4, 0, 5]], [0.5, 0.5], "a6", family="builtin")


def hart_nisan_arc(n: int, eps: float) -> ValueDistribution:
    if n < 1:
        raise ValueError("n must be at least 1")
    _check_eps(eps)
    idx = np.arange(n + 1)
    radius = (1.0 / eps) ** idx
    angle = idx * math.pi / (2 * n)
    points = np.column_stack([radius * np.cos(angle), radius * np.sin(angle)])
    points = np.clip(points, 0.0, None)
    prob = (eps ** idx - eps ** (idx + 1)) / (1 - eps ** (n + 1))
    return _dist(points, prob, "arc", family="builtin", n=n, eps=eps)


def tight_uniform_example(eps: float) -> ValueDistribution:
    _check_eps(eps)
    return _dist([[0, 1], [1 / eps, 1]], [1 - eps, eps], "tight-uniform", family="builtin", eps=eps)


def two_item_hardness(eps: float) -> ValueDistribution:
    _check_eps(eps)
    return _dist([[1, 0], [1 / eps, 2 / eps]], [1 - eps, eps], "lemma2", family="builtin", eps=eps)


def appendix_horizontal_subopt(n: int, eps: float = HORIZONTAL_EPS) -> ValueDistribution:
    if n < 1:
        raise ValueError("n must be at least 1")
    points = np.zeros((n, n))
    prob = np.zeros(n)
    for i in range(1, n + 1):
        points[i - 1, :] = 2.0 ** i
        points[i - 1, i - 1] += eps
        prob[i - 1] = 1.0 / (2 ** i * (1 - 2.0 ** -n))
    return _dist(points, prob, "b1", family="builtin", n=n, eps=eps)


def appendix_no_full_surplus() -> ValueDistribution:
    return _dist([[5, 4], [9, 10]], [0.5, 0.5], "b2", family="builtin")


def point_mass(values) -> ValueDistribution:
    return _dist([list(values)], [1.0], "point-mass", family="builtin")


BUILTIN = {
    "ex1": lambda eps, n: example_complex_info(),
    "ex2": lambda eps, n: example_lottery_opt(),
    "arc": lambda eps, n: hart_nisan_arc(n or 4, eps or 0.05),
    "tight-uniform": lambda eps, n: tight_uniform_example(eps or 0.1),
    "lemma2": lambda eps, n: two_item_hardness(eps or 0.01),
    "a6": lambda eps, n: appendix_pricing_subopt(),
    "b1": lambda eps, n: appendix_horizontal_subopt(n or 3, HORIZONTAL_EPS),
    "b2": lambda eps, n: appendix_no_full_surplus(),
}


def builtin(name: str, eps: float | None = None, n: int | None = None) -> ValueDistribution:
    try:
        return BUILTIN[name](eps, n)
    except KeyError:
        raise ValueError(f"unknown example {name!r}; choose from {', '.join(BUILTIN)}") from None


# --- random families -------------------------------------------------------


@dataclass(frozen=True)
class GeneratorSpec:
    """Seeded description of a random instance; m/size are drawn when None."""

    family: str
    seed: int
    m: int | None = None
    size: int | None = None
    params: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def parse(cls, text: str, seed: int = 0) -> "GeneratorSpec":
        """Parse ``family[:key=val,...]``, e.g. ``correlated:m=3,size=6``."""
        family, _, rest = text.partition(":")
        kw: dict[str, Any] = {}
        params: dict[str, Any] = {}
        for item in filter(None, rest.split(",")):
            key, _, val = item.partition("=")
            key = key.strip()
            num: Any = float(val) if any(c in val for c in ".e") else int(val)
            if key in ("m", "size", "seed"):
                kw[key] = int(num)
            else:
                params[key] = num
        kw.setdefault("seed", seed)
        return cls(family.strip(), params=params, **kw)


def _rng(spec: GeneratorSpec) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(spec.seed))


def _finish(points, prob, spec: GeneratorSpec) -> ValueDistribution:
    return _dist(points, prob, f"{spec.family}-{spec.seed}", family=spec.family, spec=spec.to_dict())


def random_correlated(spec: GeneratorSpec) -> ValueDistribution:
    """Arbitrary correlated supports (m <= 5, K <= 12 unless overridden).

    Shapes: common-factor lognormal, uniform box, and a two-scale shape like
    the uniform-pricing tight example (a likely low cluster plus rare points
    with one very high value).
    """
    rng = _rng(spec)
    m = spec.m or int(rng.integers(1, 6))
    K = spec.size or int(rng.integers(1, 13))
    shape = spec.params.get("shape") or rng.choice(["factor", "uniform", "two-scale"])
    if shape == "factor":
        common = rng.lognormal(0.0, 0.75, size=(K, 1))
        points = common * rng.lognormal(0.0, 0.5, size=(K, m))
    elif shape == "uniform":
        points = rng.uniform(0.0, 10.0, size=(K, m))
    elif shape == "two-scale":
        eps = float(spec.params.get("eps", 10 ** rng.uniform(-3, -1)))
        points, prob = _two_scale(rng, m, K, eps)
        return _finish(*_dedupe(points, prob), spec)
    else:
        raise ValueError(f"unknown correlated shape {shape!r}")
    prob = rng.dirichlet(np.full(K, float(spec.params.get("alpha", 1.0))))
    points, prob = _dedupe(points, prob)
    return _finish(points, prob, spec)


def _two_scale(rng, m, K, eps):
    """Likely points worth about 1 on some product and nothing on product h,
    plus rare points worth about 1/eps on h."""
    h = int(rng.integers(0, m))
    n_high = max(1, K // 4) if K > 1 else 1
    n_low = K - n_high
    low = rng.uniform(0.0, 0.05, size=(n_low, m))
    if m > 1:
        others = [j for j in range(m) if j != h]
        low[np.arange(n_low), rng.choice(others, size=n_low)] = rng.uniform(0.95, 1.0, n_low)
        low[:, h] = 0.0
    else:
        low[:, 0] = rng.uniform(0.95, 1.0, n_low)
    high = rng.uniform(0.0, 1.0, size=(n_high, m))
    high[:, h] = rng.uniform(0.9, 1.0, n_high) / eps
    points = np.vstack([low, high])
    prob = np.concatenate([rng.dirichlet(np.ones(n_low)) * (1 - eps) if n_low else np.zeros(0),
                           rng.dirichlet(np.ones(n_high)) * eps])
    return points, prob


def _dedupe(points, prob):
    seen: dict[tuple, int] = {}
    keep_pts, keep_pr = [], []
    for row, pr in zip(np.asarray(points).tolist(), prob):
        key = tuple(row)
        if key in seen:
            keep_pr[seen[key]] += pr
        else:
            seen[key] = len(keep_pts)
            keep_pts.append(row)
            keep_pr.append(pr)
    return np.array(keep_pts), np.array(keep_pr)


def random_neg_affiliated(spec: GeneratorSpec, budget: int = 1000) -> ValueDistribution:
    """Log-submodular mass on a full product grid.

    Start from independent marginals and tilt by exp(-theta_ij g(v_i) g(v_j))
    with theta >= 0 and g increasing; each tilt is submodular in log space.
    The result is re-checked and redrawn on failure.
    """
    from .approx import is_negatively_affiliated

    rng = _rng(spec)
    m = spec.m or int(rng.integers(2, 4))
    for _ in range(budget):
        sizes = [int(rng.integers(2, 4)) for _ in range(m)]
        grids = [np.sort(rng.uniform(0.0, 10.0, size=g)) for g in sizes]
        marg = [rng.dirichlet(np.ones(g)) for g in sizes]
        strength = float(spec.params.get("strength", 3.0))
        theta = rng.uniform(0.0, strength, size=(m, m))
        points = np.array(list(itertools.product(*grids)))
        idx = np.array(list(itertools.product(*[range(g) for g in sizes])))
        logf = sum(np.log(marg[i][idx[:, i]]) for i in range(m))
        scaled = points / 10.0
        for i in range(m):
            for j in range(i + 1, m):
                logf = logf - theta[i, j] * scaled[:, i] * scaled[:, j]
        prob = np.exp(logf - logf.max())
        dist = _finish(points, prob, spec)
        if is_negatively_affiliated(dist)[0]:
            return dist
    raise RuntimeError("negative-affiliation rejection budget exhausted")


def random_exchangeable(spec: GeneratorSpec) -> ValueDistribution:
    """Symmetrise random value vectors over all coordinate permutations.

    Coordinates within a vector are distinct, so the top product is never tied.
    """
    rng = _rng(spec)
    m = spec.m or int(rng.integers(1, 4))
    n_base = spec.size or int(rng.integers(1, 4))
    bases = [rng.uniform(0.0, 10.0, size=m) for _ in range(n_base)]
    weights = rng.dirichlet(np.ones(n_base))
    points, prob = [], []
    for base, wgt in zip(bases, weights):
        perms = sorted(set(itertools.permutations(base.tolist())))
        for perm in perms:
            points.append(perm)
            prob.append(wgt / len(perms))
    points, prob = _dedupe(points, prob)
    return _finish(points, prob, spec)


FAMILIES = {
    "correlated": random_correlated,
    "neg-affiliated": random_neg_affiliated,
    "exchangeable": random_exchangeable,
}


def generate(spec: GeneratorSpec) -> ValueDistribution:
    try:
        gen = FAMILIES[spec.family]
    except KeyError:
        raise ValueError(f"unknown family {spec.family!r}; choose from {', '.join(FAMILIES)}") from None
    return gen(spec)

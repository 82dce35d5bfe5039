"""Horizontal and coarse horizontal disclosure, and the uniform-price pooling program.

Signals of a coarse horizontal disclosure are labelled by sorted tuples of
(0-based) product indices; the label of every signal a support point can
receive contains that point's top product.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import InformationStructure, ValueDistribution, optimal_welfare
from .lp import LinearProgram, lp_solve

SALE_TOL = 1e-12
# transport entries below this are LP noise
_T_EPS = 1e-14


@dataclass(frozen=True, eq=False)
class TopItemProfile:
    top: np.ndarray  # i*(v) per support point
    class_mass: np.ndarray  # P(i* = i)
    cond_mean: np.ndarray  # row i' = E[v | i* = i'], NaN for empty classes

    def nu(self, i: int, i_prime: int) -> float:
        """E[v_i | i*(v) = i_prime]."""
        return float(self.cond_mean[i_prime, i])

    @property
    def own(self) -> np.ndarray:
        """E[v_i | i* = i] per product (NaN on empty classes)."""
        return np.diag(self.cond_mean).copy()

    @property
    def nonempty(self) -> np.ndarray:
        return np.flatnonzero(self.class_mass > 0)


def _profile(V: np.ndarray, w: np.ndarray) -> TopItemProfile:
    m = V.shape[1]
    top = np.argmax(V, axis=1)
    mass = np.zeros(m)
    np.add.at(mass, top, w)
    sums = np.zeros((m, m))
    np.add.at(sums, top, w[:, None] * V)
    with np.errstate(invalid="ignore", divide="ignore"):
        cond = np.where(mass[:, None] > 0, sums / mass[:, None], np.nan)
    return TopItemProfile(top, mass, cond)


def top_item_profile(dist: ValueDistribution) -> TopItemProfile:
    return _profile(dist.support, dist.prob)


def horizontal_disclosure(dist: ValueDistribution) -> InformationStructure:
    top = dist.top
    classes = sorted(set(top.tolist()))
    kernel = np.zeros((dist.K, len(classes)))
    for s, i in enumerate(classes):
        kernel[top == i, s] = 1.0
    return InformationStructure(tuple((i,) for i in classes), kernel)


def _split(prof: TopItemProfile, p: float) -> tuple[list[int], list[int]]:
    own = prof.own
    plus, minus = [], []
    for i in prof.nonempty:
        # same arithmetic as the class means, so exact candidates compare equal
        (plus if own[i] >= p else minus).append(int(i))
    return plus, minus


def i_plus(dist: ValueDistribution, p: float) -> list[int]:
    return _split(top_item_profile(dist), p)[0]


def wel_split(dist: ValueDistribution, p: float) -> tuple[float, float]:
    """(Wel+(p), Wel-(p)): expected top value split by whether i*(v) is in I+(p)."""
    prof = top_item_profile(dist)
    plus, _ = _split(prof, p)
    best = dist.support.max(axis=1)
    in_plus = np.isin(prof.top, plus)
    return float(dist.prob[in_plus] @ best[in_plus]), float(dist.prob[~in_plus] @ best[~in_plus])


@dataclass(frozen=True, eq=False)
class PoolingPlan:
    price: float
    i_plus: tuple[int, ...]
    i_minus: tuple[int, ...]
    transport: np.ndarray  # K x m, mass of point k pooled into the signal of product i
    sale_probability: float
    top: np.ndarray
    mass: np.ndarray

    def information_structure(self) -> InformationStructure:
        """Coarse horizontal disclosure induced by the plan.

        One signal per product in I+, labelled {i} plus the top items pooled
        into it; unpooled mass of I- classes gets the singleton signal of its
        top item.
        """
        K, m = self.transport.shape
        frac = self.transport / self.mass[:, None]
        labels: list[tuple[int, ...]] = []
        cols: list[np.ndarray] = []
        for i in self.i_plus:
            col = np.where(self.top == i, 1.0, 0.0) + frac[:, i]
            pooled = {int(self.top[k]) for k in np.flatnonzero(frac[:, i] > 0)}
            labels.append(tuple(sorted(pooled | {i})))
            cols.append(col)
        rest = np.clip(1.0 - frac.sum(axis=1), 0.0, 1.0)
        rest[np.isin(self.top, self.i_plus)] = 0.0
        for i in self.i_minus:
            col = np.where(self.top == i, rest, 0.0)
            if col.sum() > 0:
                labels.append((i,))
                cols.append(col)
        kernel = np.column_stack(cols) if cols else np.zeros((K, 0))
        # renormalise away LP round-off so rows sum to one
        kernel = kernel / kernel.sum(axis=1, keepdims=True)
        return InformationStructure(tuple(labels), kernel)


def _pool(V: np.ndarray, w: np.ndarray, p: float) -> PoolingPlan:
    """Maximise sale probability at uniform price p over (sub-)probability masses w."""
    prof = _profile(V, w)
    plus, minus = _split(prof, p)
    K, m = V.shape
    transport = np.zeros((K, m))
    if not plus:
        return PoolingPlan(p, (), tuple(minus), transport, 0.0, prof.top, w)
    low = np.flatnonzero(np.isin(prof.top, minus))
    base = float(prof.class_mass[plus].sum())
    if low.size == 0:
        return PoolingPlan(p, tuple(plus), tuple(minus), transport, base, prof.top, w)

    nL, nP = low.size, len(plus)
    n = nL * nP  # variable (a, b) -> a * nP + b
    A = np.zeros((nL + nP, n))
    rhs = np.zeros(nL + nP)
    for a, k in enumerate(low):
        A[a, a * nP:(a + 1) * nP] = 1.0
        rhs[a] = w[k]
    for b, i in enumerate(plus):
        A[nL + b, b::nP] = p - V[low, i]
        own = prof.top == i
        rhs[nL + b] = max(0.0, float(w[own] @ (V[own, i] - p)))
    res = lp_solve(LinearProgram(np.ones(n), A, ["<="] * (nL + nP), rhs))
    if not res.ok:  # pragma: no cover - zero transport is always feasible
        raise RuntimeError(f"pooling LP returned {res.status}")
    t = np.clip(res.x, 0.0, None).reshape(nL, nP)
    t[t < _T_EPS * max(1.0, float(w.max()))] = 0.0
    over = t.sum(axis=1) / w[low]
    t[over > 1] /= over[over > 1, None]
    for b, i in enumerate(plus):
        transport[low, i] = t[:, b]
    sale = base + float(t.sum())
    return PoolingPlan(p, tuple(plus), tuple(minus), transport, min(sale, 1.0 + 1e-12), prof.top, w)


def max_sale_pooling(dist: ValueDistribution, p: float) -> PoolingPlan:
    if p <= 0:
        raise ValueError("pooling price must be positive")
    return _pool(dist.support, dist.prob, p)


def _price_candidates(dist: ValueDistribution, prof: TopItemProfile) -> np.ndarray:
    own = prof.own[prof.nonempty]
    cands = np.concatenate([own, dist.support.ravel(), dist.mean])
    hi = own.max()
    cands = cands[(cands > 0) & (cands <= hi)]
    return np.unique(cands)


def max_uniform_price(dist: ValueDistribution, tol: float = 1e-10) -> tuple[float, PoolingPlan]:
    """Largest uniform price p* at which some coarse horizontal pooling sells surely."""
    K, m = dist.support.shape
    if optimal_welfare(dist) <= 0:
        prof = top_item_profile(dist)
        return 0.0, PoolingPlan(0.0, (), tuple(int(i) for i in prof.nonempty),
                                np.zeros((K, m)), 0.0, prof.top, dist.prob)
    prof = top_item_profile(dist)
    cache: dict[float, PoolingPlan] = {}

    def plan(p: float) -> PoolingPlan:
        if p not in cache:
            cache[p] = _pool(dist.support, dist.prob, p)
        return cache[p]

    def feasible(p: float) -> bool:
        return plan(p).sale_probability >= 1.0 - SALE_TOL

    # 0 is the feasible limit; the largest class mean bounds p* from above
    cands = np.concatenate([[0.0], _price_candidates(dist, prof)])
    lo_i, hi_i = 0, cands.size - 1
    if feasible(float(cands[hi_i])):
        p_star = float(cands[hi_i])
        return p_star, plan(p_star)
    # invariant: cands[lo_i] feasible, cands[hi_i] not
    while hi_i - lo_i > 1:
        mid = (lo_i + hi_i) // 2
        if feasible(float(cands[mid])):
            lo_i = mid
        else:
            hi_i = mid
    lo, hi = float(cands[lo_i]), float(cands[hi_i])
    # exact breakpoints are returned as-is
    if lo > 0 and not feasible(min(hi, lo + 1e-9 * max(1.0, lo))):
        return lo, plan(lo)
    while hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if feasible(mid):
            lo = mid
        else:
            hi = mid
    if lo <= 0:  # pragma: no cover - only reachable when OPT-Wel = 0
        return 0.0, plan(hi)
    return lo, plan(lo)

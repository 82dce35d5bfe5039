"""Constructive pricing mechanisms and distributional condition checkers.

Every construction returns a :class:`ConstructionCertificate` whose revenue has
been recomputed through the audited path (``induce_mechanism`` + ``revenue``),
so the reported numbers never come from the construction's own bookkeeping.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .core import (
    InformationStructure,
    Mechanism,
    PricingMechanism,
    ValueDistribution,
    induce_mechanism,
    optimal_welfare,
    revenue,
    signal_stats,
)
from .disclosure import (
    _pool,
    _split,
    horizontal_disclosure,
    max_uniform_price,
    top_item_profile,
)
from .flow import bipartite_max_flow

TWO_PRICE_TARGET = 0.5017
CASE1_EPS = 1e-6
FULL_SURPLUS_TOL = 1e-9
AFFILIATION_TOL = 1e-15
EXCHANGEABLE_TOL = 1e-12
MAX_EXCHANGEABLE_M = 8

LOW_WELFARE = "low-welfare"
FLOW_SATURATED = "flow-saturated"
FLOW_DEFICIENT = "flow-deficient"
FALLBACK = "fallback-uniform"


class ConditionFailed(ValueError):
    """Precondition of a construction does not hold; carries the witness."""

    def __init__(self, message: str, witness=None):
        super().__init__(message)
        self.witness = witness


@dataclass(frozen=True)
class TwoPriceParams:
    delta: float = 0.0068
    delta_hat: float = 0.925
    k: int = 11

    def __post_init__(self):
        if not (0 < self.delta < 1 and 0 < self.delta_hat < 1 and self.k >= 1):
            raise ValueError("need delta, delta_hat in (0, 1) and k >= 1")

    @property
    def target(self) -> float:
        """2/(2 - delta), the per-p* revenue each branch must clear."""
        return 2.0 / (2.0 - self.delta)

    @property
    def c(self) -> float:
        return (self.k / 2 - self.target) / (self.target - self.delta_hat)

    @property
    def w_bar(self) -> float:
        d, k = self.delta, self.k
        num = self.target * (1 + (1 - (k + 1) * d) / k) - 1 + (k + 1) * d
        return num / (self.c + 1 - k)

    def closing_value(self, sign: float = -1.0) -> float:
        """Deficient-flow revenue per unit p*; sign=-1 is the conservative form."""
        d, k, dh, wb = self.delta, self.k, self.delta_hat, self.w_bar
        return 0.5 * (1 - (k + 1) * d - wb * k) + (1 - 2 / k + sign * self.c * wb) * dh

    @property
    def closing_ok(self) -> bool:
        return self.c > 0 and self.w_bar > 0 and self.closing_value(-1.0) > self.target


@dataclass(frozen=True, eq=False)
class ConstructionCertificate:
    branch: str
    mechanism: PricingMechanism
    guarantee: float
    revenue: float
    opt_wel: float
    induced: Mechanism
    details: dict[str, Any] = field(default_factory=dict)

    @property
    def ratio(self) -> float:
        return self.revenue / self.opt_wel if self.opt_wel > 0 else 1.0

    def to_dict(self) -> dict[str, Any]:
        from .io import mechanism_to_dict

        return {
            "branch": self.branch,
            "guarantee": self.guarantee,
            "revenue": self.revenue,
            "opt_wel": self.opt_wel,
            "ratio": self.ratio,
            "mechanism": mechanism_to_dict(self.induced, self.mechanism),
        }


def _certify(dist, pricing, branch, guarantee, opt, **details) -> ConstructionCertificate:
    mech = induce_mechanism(dist, pricing)
    rev = revenue(dist, mech)
    return ConstructionCertificate(branch, pricing, guarantee, rev, opt, mech, details)


def _empty(dist: ValueDistribution, opt: float, branch: str) -> ConstructionCertificate:
    pricing = PricingMechanism(InformationStructure.no_information(dist.K), np.full(dist.m, np.inf))
    return _certify(dist, pricing, branch, 0.0, opt)


# --- uniform pricing --------------------------------------------------------


def _uniform_on(dist, info: InformationStructure, p: float, selling: set) -> float:
    """Largest uniform price <= p that every signal in ``selling`` still pays.

    LP round-off can leave a pooled posterior a hair under p.
    """
    stats = signal_stats(dist, info)
    price = p
    for s, lab in enumerate(info.signals):
        if lab in selling:
            price = min(price, float(stats.nu[s].max()))
    return price


def uniform_half(dist: ValueDistribution) -> ConstructionCertificate:
    """Uniform price p* under its sure-sale coarse horizontal disclosure."""
    opt = optimal_welfare(dist)
    if opt <= 0:
        return _empty(dist, opt, "degenerate")
    p_star, plan = max_uniform_price(dist)
    info = plan.information_structure()
    selling = {lab for lab in info.signals if any(i in plan.i_plus for i in lab)}
    price = _uniform_on(dist, info, p_star, selling)
    pricing = PricingMechanism(info, np.full(dist.m, price))
    return _certify(dist, pricing, "uniform", 0.5, opt, p_star=p_star)


# --- two-price construction ---------------------------------------------------


def _next_breakpoint_gap(own: np.ndarray, p: float) -> float:
    above = own[own > p]
    return float(above.min() - p) if above.size else math.inf


def _low_welfare(dist, prof, p_star: float, eps: float) -> float:
    _, minus = _split(prof, p_star + eps)
    best = dist.support.max(axis=1)
    mask = np.isin(prof.top, minus)
    return float(dist.prob[mask] @ best[mask])


def _flow_graph(prof, p_star: float, eps: float, params: TwoPriceParams):
    # the case split is the right limit at p*, same as the low-welfare test
    plus, minus = _split(prof, p_star + eps)
    k = params.k
    own = prof.own
    left = [i for i in plus
            if own[i] >= k * p_star and any(own[i] <= 2 * prof.nu(i, j) for j in minus)]
    edges = []
    for a, i in enumerate(left):
        for b, j in enumerate(minus):
            if own[j] >= params.delta_hat * p_star and prof.nu(i, j) >= 0.5 * own[i]:
                edges.append((a, b))
    return plus, minus, left, edges


def _saturated_plan(dist, prof, p_star, params, left, minus, flow):
    """Pool along the flow, then run the sure-sale program at the higher price."""
    V, f = dist.support, dist.prob
    K = dist.K
    price = params.target * p_star
    mass = prof.class_mass
    inflow = flow.sum(axis=0)
    frac_cols: dict[tuple, np.ndarray] = {}
    taken = np.zeros(K)
    for a, i in enumerate(left):
        for b, j in enumerate(minus):
            fl = flow[a, b]
            if fl <= 0:
                continue
            low = min(params.c * fl, mass[j] * fl / inflow[b])
            col = np.zeros(K)
            col[prof.top == i] = fl / mass[i]
            col[prof.top == j] = low / mass[j]
            lab = tuple(sorted((i, j)))
            frac_cols[lab] = frac_cols.get(lab, 0.0) + col
            taken += col
    taken = np.clip(taken, 0.0, 1.0)
    residual = f * (1.0 - taken)
    live = residual > 1e-15 * f.max()
    selling = set(frac_cols)
    cols = dict(frac_cols)
    if live.any():
        sub = _pool(V[live], residual[live], price)
        sub_info = sub.information_structure()
        share = np.zeros(K)
        share[live] = 1.0 - taken[live]
        for s, lab in enumerate(sub_info.signals):
            col = np.zeros(K)
            col[live] = share[live] * sub_info.kernel[:, s]
            cols[lab] = cols.get(lab, 0.0) + col
            if any(x in sub.i_plus for x in lab):
                selling.add(lab)
    labels = list(cols)
    kernel = np.column_stack([cols[lab] for lab in labels])
    kernel = kernel / kernel.sum(axis=1, keepdims=True)
    info = InformationStructure(tuple(labels), kernel)
    return info, _uniform_on(dist, info, price, selling)


def _cap_pooling(dist, prof, plus, minus, cap: float):
    """Pool each I+ class whose own mean exceeds ``cap`` with a proportional
    slice of all I- mass, bringing its posterior down to ``cap``.

    Everything else keeps its horizontal signal. Returns (structure, pooled
    classes). If I- mass runs out, every pooled class gets a scaled-down share
    and its posterior stays above ``cap``.
    """
    K = dist.K
    mass = prof.class_mass
    low = np.isin(prof.top, minus)
    L = float(mass[minus].sum()) if minus else 0.0
    want: dict[int, float] = {}
    for i in plus:
        if prof.own[i] <= cap or L <= 0:
            continue
        a = float(mass[minus] @ prof.cond_mean[minus, i]) / L  # E[v_i | i* in I-]
        if a < cap:
            want[i] = mass[i] * (prof.own[i] - cap) / (cap - a)
    total = sum(want.values())
    scale = min(1.0, L / total) if total > 0 else 1.0
    cols: list[np.ndarray] = []
    labels: list[tuple[int, ...]] = []
    for i in sorted(want):
        col = np.where(prof.top == i, 1.0, 0.0)
        col[low] = want[i] * scale / L
        cols.append(col)
        labels.append(tuple(sorted({i, *minus})))
    rest = 1.0 - total * scale / L if L > 0 else 1.0
    for i in prof.nonempty:
        if i in want:
            continue
        col = np.where(prof.top == i, rest if i in minus else 1.0, 0.0)
        cols.append(col)
        labels.append((int(i),))
    kernel = np.column_stack(cols) if cols else np.ones((K, 1))
    kernel = kernel / kernel.sum(axis=1, keepdims=True)
    return InformationStructure(tuple(labels), kernel), sorted(want)


def two_price(dist: ValueDistribution, params: TwoPriceParams | None = None) -> ConstructionCertificate:
    """Case analysis of the 0.5017 construction, returned best-of with uniform_half."""
    params = params or TwoPriceParams()
    base = uniform_half(dist)
    opt = base.opt_wel
    if opt <= 0:
        return base
    prof = top_item_profile(dist)
    p_star = base.details["p_star"]
    eps = min(CASE1_EPS, 0.5 * _next_breakpoint_gap(prof.own[prof.nonempty], p_star))
    wel_minus = _low_welfare(dist, prof, p_star, eps)
    details: dict[str, Any] = {"p_star": p_star, "eps": eps, "wel_minus": wel_minus}

    if wel_minus <= (1 - params.delta) * p_star:
        branch = LOW_WELFARE
        built = base
    else:
        plus, minus, left, edges = _flow_graph(prof, p_star, eps, params)
        mass = prof.class_mass
        if left and edges:
            w, flow = bipartite_max_flow(mass[left], params.c * mass[minus], edges)
        else:
            w, flow = 0.0, np.zeros((len(left), len(minus)))
        details.update(flow=w, i_plus_k=left, i_minus=minus)
        if w >= params.w_bar:
            branch = FLOW_SATURATED
            info, price = _saturated_plan(dist, prof, p_star, params, left, minus, flow)
            pricing = PricingMechanism(info, np.full(dist.m, price))
        else:
            branch = FLOW_DEFICIENT
            cap = params.c * mass[minus]
            inflow = flow.sum(axis=0)
            sat = [j for b, j in enumerate(minus) if inflow[b] >= cap[b] * (1 - 1e-12) and cap[b] > 0]
            high = set(plus) | set(sat)
            prices = np.array([params.k * p_star / 2 if i in high else params.delta_hat * p_star
                               for i in range(dist.m)])
            info, pooled = _cap_pooling(dist, prof, plus, minus, params.k * p_star)
            pricing = PricingMechanism(info, prices)
            details.update(i_minus_k=sat, capped=pooled)
        built = _certify(dist, pricing, branch, 0.5, opt)

    chosen = built if built.revenue >= base.revenue else base
    details["source"] = "construction" if chosen is built else "uniform"
    details["construction_revenue"] = built.revenue
    ratio = chosen.revenue / opt
    verified = params.closing_ok and chosen.revenue >= TWO_PRICE_TARGET * opt - 1e-6
    if verified:
        return ConstructionCertificate(branch, chosen.mechanism, max(TWO_PRICE_TARGET, ratio),
                                       chosen.revenue, opt, chosen.induced, details)
    details["attempted"] = branch
    return ConstructionCertificate(FALLBACK, chosen.mechanism, 0.5, chosen.revenue, opt,
                                   chosen.induced, details)


# --- two products -------------------------------------------------------------


def best_of_three_two_products(dist: ValueDistribution) -> ConstructionCertificate:
    """Best of: product 1 alone, product 2 alone, horizontal disclosure with two prices."""
    if dist.m != 2:
        raise ValueError(f"best_of_three needs exactly 2 products, got {dist.m}")
    opt = optimal_welfare(dist)
    no_info = InformationStructure.no_information(dist.K)
    mean = dist.mean
    cands = {
        "M1": PricingMechanism(no_info, np.array([mean[0], np.inf])),
        "M2": PricingMechanism(no_info, np.array([np.inf, mean[1]])),
    }
    prof = top_item_profile(dist)
    info = horizontal_disclosure(dist)
    nonempty = prof.nonempty
    if nonempty.size == 1:
        i = int(nonempty[0])
        prices = np.full(2, np.inf)
        prices[i] = prof.own[i]
    else:
        nu = prof.cond_mean  # row = signal, column = product
        # relabel so the second product's own posterior is the larger one
        a, b = (0, 1) if nu[1, 1] >= nu[0, 0] else (1, 0)
        prices = np.empty(2)
        prices[a] = nu[a, a]
        prices[b] = nu[b, b] - max(0.0, nu[b, a] - nu[a, a])
    cands["M3"] = PricingMechanism(info, prices)
    certs = {name: _certify(dist, pm, name, 2 / 3, opt) for name, pm in cands.items()}
    revs = {name: c.revenue for name, c in certs.items()}
    name = max(revs, key=lambda n: (revs[n], -int(n[1])))
    best = certs[name]
    return ConstructionCertificate(name, best.mechanism, 2 / 3, best.revenue, opt, best.induced,
                                   {"revenues": revs})


# --- full surplus -------------------------------------------------------------


def full_surplus_condition(dist: ValueDistribution, tol: float = FULL_SURPLUS_TOL):
    """(ok, witness): own-class mean of every product beats its mean on other classes.

    The witness (i, i') is 0-based: product i is worth more on class i' than on
    its own class.
    """
    prof = top_item_profile(dist)
    eps = tol * max(1.0, float(dist.support.max()))
    live = prof.nonempty
    for i in live:
        for j in live:
            if i != j and prof.nu(i, i) < prof.nu(i, j) - eps:
                return False, (int(i), int(j))
    return True, None


def full_surplus_mechanism(dist: ValueDistribution) -> PricingMechanism:
    ok, witness = full_surplus_condition(dist)
    if not ok:
        raise ConditionFailed(f"full-surplus condition fails at products {witness}", witness)
    info = horizontal_disclosure(dist)
    stats = signal_stats(dist, info)
    prices = np.full(dist.m, np.inf)
    for s, (i,) in enumerate(info.signals):
        prices[i] = stats.nu[s, i]
    return PricingMechanism(info, prices)


def full_surplus_certificate(dist: ValueDistribution) -> ConstructionCertificate:
    return _certify(dist, full_surplus_mechanism(dist), "full-surplus", 1.0, optimal_welfare(dist))


# --- distribution checks --------------------------------------------------------


def is_negatively_affiliated(dist: ValueDistribution, tol: float = AFFILIATION_TOL):
    """Log-submodularity with f = 0 off the support; returns (ok, witness pair)."""
    mass = {tuple(v): p for v, p in zip(dist.support.tolist(), dist.prob)}
    pts = list(mass)
    for a in range(len(pts)):
        v = pts[a]
        for b in range(a + 1, len(pts)):
            u = pts[b]
            lo = tuple(min(x, y) for x, y in zip(v, u))
            hi = tuple(max(x, y) for x, y in zip(v, u))
            if mass[v] * mass[u] < mass.get(lo, 0.0) * mass.get(hi, 0.0) - tol:
                return False, (v, u)
    return True, None


def is_exchangeable(dist: ValueDistribution, tol: float = EXCHANGEABLE_TOL) -> bool:
    if dist.m > MAX_EXCHANGEABLE_M:
        raise ValueError(f"exchangeability check limited to m <= {MAX_EXCHANGEABLE_M}")
    mass = {tuple(v): p for v, p in zip(dist.support.tolist(), dist.prob)}
    for perm in itertools.permutations(range(dist.m)):
        for v, p in mass.items():
            q = mass.get(tuple(v[i] for i in perm))
            if q is None or abs(q - p) > tol:
                return False
    return True

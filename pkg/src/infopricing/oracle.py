"""LP-based ground truth for small instances.

The optimal menu for a fixed information structure is a finite LP over the
posterior types. On top of it sit exhaustive search over deterministic
partitions, a grid-and-refine sweep over two-signal structures when K = 2,
and a two-signal virtual-value upper bound.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Any, Iterator, Sequence

import numpy as np

from .core import (
    InformationStructure,
    Mechanism,
    SignalStats,
    ValueDistribution,
    buyer_choice,
    optimal_welfare,
    revenue,
    signal_stats,
)
from .lp import LinearProgram, lp_solve

MAX_SUPPORT = 8
MAX_PRICING_ASSIGNMENTS = 50_000
BINARY_STEP = 0.05
BINARY_RESOLUTION = 1e-6
BOUND_TOL = 1e-6


class SizeLimitError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class MenuSolution:
    revenue: float
    alloc: np.ndarray  # S x m
    payments: np.ndarray  # S

    def mechanism(self, info: InformationStructure) -> Mechanism:
        alloc = np.clip(self.alloc, 0.0, 1.0)
        total = alloc.sum(axis=1, keepdims=True)
        # LP round-off can leave a row a hair above one
        alloc = np.where(total > 1.0, alloc / np.maximum(total, 1.0), alloc)
        return Mechanism(info, alloc, self.payments)


def _scale(stats: SignalStats) -> float:
    """Expected first-best welfare; dividing by it keeps revenue O(1)."""
    wel = float(stats.r @ np.max(np.abs(stats.nu), axis=1)) if stats.nu.size else 0.0
    return wel if wel > 0 else 1.0


def optimal_menu_lp(stats: SignalStats) -> MenuSolution:
    """Revenue-maximal IC/IR menu (lotteries allowed) for fixed posteriors."""
    S, m = stats.nu.shape
    scale = _scale(stats)
    nu = stats.nu / scale  # keeps the tableau well conditioned
    n = S * (m + 1)

    def xcol(s, i):
        return s * m + i

    def pcol(s):
        return S * m + s

    rows, senses, rhs = [], [], []
    for s in range(S):
        row = np.zeros(n)
        row[s * m:(s + 1) * m] = 1.0
        rows.append(row)
        senses.append("<=")
        rhs.append(1.0)
    for s in range(S):
        ir = np.zeros(n)
        ir[s * m:(s + 1) * m] = nu[s]
        ir[pcol(s)] = -1.0
        rows.append(ir)
        senses.append(">=")
        rhs.append(0.0)
        for t in range(S):
            if t == s:
                continue
            row = ir.copy()
            row[t * m:(t + 1) * m] -= nu[s]
            row[pcol(t)] += 1.0
            rows.append(row)
            senses.append(">=")
            rhs.append(0.0)
    obj = np.zeros(n)
    obj[S * m:] = stats.r
    bounds = [(0.0, 1.0)] * (S * m) + [(None, None)] * S
    res = lp_solve(LinearProgram(obj, np.array(rows), senses, rhs, bounds))
    if not res.ok:  # pragma: no cover - the empty menu is always feasible
        raise RuntimeError(f"menu LP returned {res.status}")
    alloc = res.x[:S * m].reshape(S, m)
    pay = res.x[S * m:] * scale
    return MenuSolution(float(stats.r @ pay), alloc, pay)


def optimal_menu_for(dist: ValueDistribution, info: InformationStructure) -> tuple[float, Mechanism]:
    """Menu LP for ``info``, returned with the audited revenue of the result."""
    sol = optimal_menu_lp(signal_stats(dist, info))
    mech = sol.mechanism(info)
    return revenue(dist, mech, tol=BOUND_TOL), mech


# --- deterministic pricing -------------------------------------------------------


def optimal_pricing(stats: SignalStats, offered: Sequence[int] | None = None,
                    limit: int = MAX_PRICING_ASSIGNMENTS) -> tuple[float, np.ndarray]:
    """Best posted prices for fixed posteriors (no lotteries).

    Enumerates which product (or none) each signal buys and solves the price
    LP for each assignment. Returns (revenue, prices) where revenue is the
    value realised by the buyer's seller-optimal best response, so it never
    relies on an LP tie. Unoffered products get price inf.
    """
    S, m = stats.nu.shape
    products = list(range(m)) if offered is None else sorted(set(offered))
    count = (len(products) + 1) ** S
    if count > limit:
        raise SizeLimitError(f"{count} pricing assignments exceeds limit {limit}")
    scale = _scale(stats)
    nu = stats.nu / scale
    def realised(prices):
        total = 0.0
        for s in range(S):
            _, pay = buyer_choice(stats.nu[s], prices)
            total += stats.r[s] * pay
        return total

    best_rev, best_prices = 0.0, np.full(m, np.inf)
    seen: set[tuple] = set()
    for assign in itertools.product([None] + products, repeat=S):
        used = sorted({a for a in assign if a is not None})
        if not used:
            continue
        col = {i: c for c, i in enumerate(used)}
        rows, rhs = [], []
        for s, a in enumerate(assign):
            if a is None:
                for j in used:  # no positive surplus anywhere
                    row = np.zeros(len(used))
                    row[col[j]] = -1.0
                    rows.append(row)
                    rhs.append(-nu[s, j])
                continue
            row = np.zeros(len(used))
            row[col[a]] = 1.0
            rows.append(row)
            rhs.append(nu[s, a])
            for j in used:
                if j != a:  # nu_a - p_a >= nu_j - p_j
                    row = np.zeros(len(used))
                    row[col[a]] = 1.0
                    row[col[j]] = -1.0
                    rows.append(row)
                    rhs.append(nu[s, a] - nu[s, j])
        obj = np.zeros(len(used))
        for s, a in enumerate(assign):
            if a is not None:
                obj[col[a]] += stats.r[s]
        res = lp_solve(LinearProgram(obj, np.array(rows), ["<="] * len(rows), rhs))
        if not res.ok:
            continue
        prices = np.full(m, np.inf)
        prices[used] = np.maximum(res.x, 0.0) * scale
        key = tuple(np.round(prices, 12))
        if key in seen:
            continue
        seen.add(key)
        rev = realised(prices)
        if rev > best_rev:
            best_rev, best_prices = rev, prices
    return best_rev, best_prices


# --- partitions ---------------------------------------------------------------


def set_partitions(K: int) -> Iterator[list[list[int]]]:
    """All set partitions of range(K), via restricted-growth strings in lex order."""
    if K == 0:
        yield []
        return
    a = [0] * K
    while True:
        blocks: list[list[int]] = [[] for _ in range(max(a) + 1)]
        for k, b in enumerate(a):
            blocks[b].append(k)
        yield blocks
        # next restricted-growth string
        j = K - 1
        while j > 0 and a[j] > max(a[:j]):
            j -= 1
        if j == 0:
            return
        a[j] += 1
        a[j + 1:] = [0] * (K - j - 1)


@dataclass(frozen=True, eq=False)
class PartitionResult:
    revenue: float
    blocks: list[list[int]]
    mechanism: Mechanism
    evaluated: int


def _efficient_menu(dist: ValueDistribution, info: InformationStructure, tops: list[int]) -> MenuSolution:
    """Menu LP with each signal's allocation fixed to the block's top product."""
    stats = signal_stats(dist, info)
    S, m = stats.nu.shape
    scale = _scale(stats)
    nu = stats.nu / scale
    alloc = np.zeros((S, m))
    alloc[np.arange(S), tops] = 1.0
    val = nu @ alloc.T  # val[s, t] = value of s for t's item
    rows, rhs = [], []
    for s in range(S):
        row = np.zeros(S)
        row[s] = 1.0
        rows.append(row)
        rhs.append(val[s, s])
        for t in range(S):
            if t != s:  # p_s - p_t <= val[s,s] - val[s,t]
                row = np.zeros(S)
                row[s] = 1.0
                row[t] = -1.0
                rows.append(row)
                rhs.append(val[s, s] - val[s, t])
    res = lp_solve(LinearProgram(stats.r, np.array(rows), ["<="] * len(rows), rhs,
                                 [(None, None)] * S))
    if not res.ok:  # pragma: no cover
        raise RuntimeError(f"efficient menu LP returned {res.status}")
    pay = res.x * scale
    return MenuSolution(float(stats.r @ pay), alloc, pay)


def best_partition_design(dist: ValueDistribution, max_support: int = MAX_SUPPORT,
                          efficient: bool = False) -> PartitionResult:
    """Best optimal menu over all deterministic information structures.

    With ``efficient=True`` only blocks whose points share a top product are
    allowed and each block must receive that product.
    """
    K = dist.K
    if K > max_support:
        raise SizeLimitError(f"K = {K} exceeds partition limit {max_support}")
    top = dist.top
    best = None
    count = 0
    for blocks in set_partitions(K):
        if efficient and any(len({int(top[k]) for k in b}) > 1 for b in blocks):
            continue
        info = InformationStructure.from_partition(blocks, K)
        if efficient:
            sol = _efficient_menu(dist, info, [int(top[b[0]]) for b in blocks])
        else:
            sol = optimal_menu_lp(signal_stats(dist, info))
        count += 1
        if best is None or sol.revenue > best[0] + 1e-12:
            best = (sol.revenue, blocks, sol, info)
    rev, blocks, sol, info = best
    mech = sol.mechanism(info)
    return PartitionResult(revenue(dist, mech, tol=BOUND_TOL), blocks, mech, count)


# --- two-signal sweep ------------------------------------------------------------


def binary_structure(alpha: Sequence[float]) -> InformationStructure:
    """Two-signal structure sending support point k to signal 0 w.p. alpha[k]."""
    a = np.asarray(alpha, dtype=float)
    return InformationStructure(("s1", "s2"), np.column_stack([a, 1.0 - a]))


@dataclass(frozen=True)
class OracleBound:
    lower: float
    lower_witness: dict[str, Any]
    upper: float
    upper_provenance: str
    diagnostics: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.lower > self.upper + BOUND_TOL * max(1.0, abs(self.upper)):
            raise ValueError(f"lower bound {self.lower} exceeds upper bound {self.upper}")

    def to_dict(self) -> dict[str, Any]:
        from .io import _jsonable

        return _jsonable({
            "lower": self.lower,
            "lower_witness": self.lower_witness,
            "upper": self.upper,
            "upper_provenance": self.upper_provenance,
            "diagnostics": self.diagnostics,
        })


def _binary_value(dist, alpha, objective, offered):
    stats = signal_stats(dist, binary_structure(alpha))
    if objective == "menu":
        return optimal_menu_lp(stats).revenue
    return optimal_pricing(stats, offered)[0]


def binary_support_optimal(dist: ValueDistribution, step: float = BINARY_STEP,
                           resolution: float = BINARY_RESOLUTION, refine: bool = True,
                           objective: str = "menu", offered: Sequence[int] | None = None) -> OracleBound:
    """Grid over (alpha_1, alpha_2) in [0,1]^2, then 3x3 local refinement with halving steps.

    ``objective="pricing"`` restricts to posted prices (optionally on the
    ``offered`` products only). Each refinement level includes the current
    best point, so refining never lowers the reported value.
    """
    if dist.K != 2:
        raise ValueError(f"binary sweep needs K = 2, got {dist.K}")
    if objective not in ("menu", "pricing"):
        raise ValueError(f"unknown objective {objective!r}")
    n = int(round(1.0 / step))
    grid = np.linspace(0.0, 1.0, n + 1)
    best_val, best_a = -math.inf, (0.0, 0.0)
    for a1 in grid:
        for a2 in grid:
            # (a1, a2) and (1-a1, 1-a2) relabel the same structure
            if (a1, a2) > (1 - a1, 1 - a2):
                continue
            val = _binary_value(dist, (a1, a2), objective, offered)
            if val > best_val:
                best_val, best_a = val, (float(a1), float(a2))
    h = 1.0 / n
    while refine and h > resolution:
        h /= 2
        centre = best_a
        for d1 in (-1, 0, 1):
            for d2 in (-1, 0, 1):
                a = (min(1.0, max(0.0, centre[0] + d1 * h)), min(1.0, max(0.0, centre[1] + d2 * h)))
                if d1 == 0 and d2 == 0:
                    continue
                val = _binary_value(dist, a, objective, offered)
                if val > best_val:
                    best_val, best_a = val, a
    return OracleBound(best_val, {"alpha": list(best_a), "objective": objective, "step": step,
                                  "refined_to": h if refine else step},
                       optimal_welfare(dist), "opt-wel")


def dual_bound_two_signals(stats: SignalStats, flow_mass: float, source: int = 0) -> float:
    """Virtual-value upper bound on menu revenue for two posterior types.

    ``flow_mass`` (at most r(source)) is routed from signal ``source`` to the
    other signal, whose virtual values are charged the source's extra value.
    Non-positive virtual values are dropped (no sale).
    """
    if stats.S != 2:
        raise ValueError(f"dual bound needs exactly 2 signals, got {stats.S}")
    a, b = source, 1 - source
    if not 0 <= flow_mass <= stats.r[a] * (1 + 1e-12):
        raise ValueError(f"flow mass must lie in [0, r(source)] = [0, {stats.r[a]}]")
    phi = np.array(stats.nu, dtype=float)
    phi[b] = stats.nu[b] - (flow_mass / stats.r[b]) * (stats.nu[a] - stats.nu[b])
    return float(stats.r @ np.maximum(0.0, phi.max(axis=1)))


def full_flow_dual(dist: ValueDistribution) -> dict[str, float]:
    """Full-flow dual bound for the fully revealing structure, both directions (K = 2)."""
    if dist.K != 2:
        raise ValueError("needs K = 2")
    stats = signal_stats(dist, InformationStructure.full_disclosure(2))
    return {f"{a}->{1 - a}": dual_bound_two_signals(stats, float(stats.r[a]), a) for a in (0, 1)}


# --- certify -----------------------------------------------------------------------


def certify(dist: ValueDistribution, max_support: int = MAX_SUPPORT,
            binary_step: float = BINARY_STEP) -> OracleBound:
    """Two-sided bracket on the optimal revenue.

    The upper bound is always OPT-Wel. The full-flow dual bound only covers the
    fully revealing structure (other structures can earn more), so it is
    reported under ``diagnostics`` and never used as a global upper bound.
    """
    from .approx import (
        best_of_three_two_products,
        full_surplus_certificate,
        full_surplus_condition,
        two_price,
        uniform_half,
    )

    if dist.K > max_support:
        raise SizeLimitError(f"K = {dist.K} exceeds certify limit {max_support}")
    cands: dict[str, tuple[float, dict]] = {}
    part = best_partition_design(dist, max_support)
    cands["partition"] = (part.revenue, {"blocks": part.blocks})
    if dist.K == 2:
        sweep = binary_support_optimal(dist, binary_step)
        cands["binary-sweep"] = (sweep.lower, sweep.lower_witness)
    cands["uniform"] = (uniform_half(dist).revenue, {})
    tp = two_price(dist)
    cands["two-price"] = (tp.revenue, {"branch": tp.branch})
    if dist.m == 2:
        b3 = best_of_three_two_products(dist)
        cands["best-of-three"] = (b3.revenue, {"branch": b3.branch})
    if full_surplus_condition(dist)[0]:
        cands["full-surplus"] = (full_surplus_certificate(dist).revenue, {})
    source = max(cands, key=lambda k: cands[k][0])
    lower, witness = cands[source]
    diagnostics: dict[str, Any] = {"candidates": {k: v[0] for k, v in cands.items()}}
    if dist.K == 2:
        diagnostics["full_disclosure_dual"] = full_flow_dual(dist)
    opt = optimal_welfare(dist)
    if lower <= opt + BOUND_TOL * max(1.0, opt):
        lower = min(lower, opt)  # LP round-off only
    return OracleBound(lower, {"source": source, **witness}, opt, "opt-wel", diagnostics)

"""Value distributions, information structures, mechanisms and buyer behaviour.

Everything here works on finite supports. A distribution is a K x m matrix of
value vectors with a probability per row; an information structure is a
K x S row-stochastic kernel. Interim utilities are always evaluated at the
posterior mean, since the buyer is risk neutral and chooses before values
are realised.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Hashable, Sequence

import numpy as np

DEFAULT_TOL = 1e-9
PROB_TOL = 1e-12
BUYER_TOL = 1e-12

SELLER_OPTIMAL = "seller-optimal"
LOWEST_INDEX = "lowest-index"
TIE_BREAKS = (SELLER_OPTIMAL, LOWEST_INDEX)


class InvalidDistribution(ValueError):
    pass


class InvalidStructure(ValueError):
    pass


class RejectedMechanism(ValueError):
    """Raised when a mechanism fails its IC/IR audit."""

    def __init__(self, report: "AuditReport"):
        super().__init__(f"mechanism violates IC/IR by {report.max_violation:.3g}")
        self.report = report


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ValueDistribution:
    support: np.ndarray
    prob: np.ndarray
    name: str | None = None
    meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        support = np.asarray(self.support, dtype=float)
        prob = np.asarray(self.prob, dtype=float).reshape(-1)
        if support.ndim == 1:
            support = support.reshape(-1, 1)
        if support.ndim != 2 or support.shape[0] < 1 or support.shape[1] < 1:
            raise InvalidDistribution("support must be a non-empty K x m array")
        if prob.size != support.shape[0]:
            raise InvalidDistribution(
                f"{support.shape[0]} support points but {prob.size} probabilities"
            )
        if not np.all(np.isfinite(support)) or not np.all(np.isfinite(prob)):
            raise InvalidDistribution("non-finite entry")
        if np.any(support < 0):
            raise InvalidDistribution("values must be non-negative")
        if np.any(prob <= 0):
            raise InvalidDistribution("probabilities must be strictly positive")
        if abs(prob.sum() - 1.0) > PROB_TOL:
            raise InvalidDistribution(f"probabilities sum to {prob.sum()!r}, not 1")
        if len({tuple(row) for row in support.tolist()}) != support.shape[0]:
            raise InvalidDistribution("duplicate support points")
        object.__setattr__(self, "support", _frozen(support))
        object.__setattr__(self, "prob", _frozen(prob))

    @property
    def K(self) -> int:
        return self.support.shape[0]

    @property
    def m(self) -> int:
        return self.support.shape[1]

    @property
    def mean(self) -> np.ndarray:
        return self.prob @ self.support

    @property
    def top(self) -> np.ndarray:
        """i*(v) per support point; ties go to the lowest product index."""
        return np.argmax(self.support, axis=1)

    @classmethod
    def from_points(cls, points: dict[tuple, float] | Sequence, prob=None, **kw):
        if isinstance(points, dict):
            prob = list(points.values())
            points = [list(p) for p in points]
        return cls(np.asarray(points, dtype=float), np.asarray(prob, dtype=float), **kw)

    def __repr__(self) -> str:
        label = f" {self.name!r}" if self.name else ""
        return f"<ValueDistribution{label} K={self.K} m={self.m}>"


@dataclass(frozen=True, eq=False)
class InformationStructure:
    """Signals plus a K x S kernel; all-zero columns are dropped."""

    signals: tuple
    kernel: np.ndarray

    def __post_init__(self):
        kernel = np.asarray(self.kernel, dtype=float)
        if kernel.ndim != 2:
            raise InvalidStructure("kernel must be a K x S matrix")
        signals = tuple(self.signals)
        if len(signals) != kernel.shape[1]:
            raise InvalidStructure(f"{len(signals)} signal labels for {kernel.shape[1]} columns")
        if np.any(kernel < -PROB_TOL) or np.any(kernel > 1 + PROB_TOL):
            raise InvalidStructure("kernel entries must lie in [0, 1]")
        kernel = np.clip(kernel, 0.0, 1.0)
        rows = kernel.sum(axis=1)
        if np.any(np.abs(rows - 1.0) > PROB_TOL):
            raise InvalidStructure("kernel rows must sum to 1")
        live = kernel.sum(axis=0) > 0
        if not np.all(live):
            kernel = kernel[:, live]
            signals = tuple(s for s, keep in zip(signals, live) if keep)
        object.__setattr__(self, "signals", signals)
        object.__setattr__(self, "kernel", _frozen(kernel))

    @property
    def S(self) -> int:
        return self.kernel.shape[1]

    @classmethod
    def no_information(cls, K: int, label: Hashable = "all") -> "InformationStructure":
        return cls((label,), np.ones((K, 1)))

    @classmethod
    def full_disclosure(cls, K: int) -> "InformationStructure":
        return cls(tuple(range(K)), np.eye(K))

    @classmethod
    def from_partition(cls, blocks: Sequence[Sequence[int]], K: int, labels=None):
        kernel = np.zeros((K, len(blocks)))
        for s, block in enumerate(blocks):
            kernel[list(block), s] = 1.0
        if labels is None:
            labels = tuple(tuple(b) for b in blocks)
        return cls(tuple(labels), kernel)

    @classmethod
    def from_labels(cls, labels: Sequence[Hashable]) -> "InformationStructure":
        """Deterministic structure sending support point k to ``labels[k]``."""
        uniq = list(dict.fromkeys(labels))
        index = {lab: s for s, lab in enumerate(uniq)}
        kernel = np.zeros((len(labels), len(uniq)))
        for k, lab in enumerate(labels):
            kernel[k, index[lab]] = 1.0
        return cls(tuple(uniq), kernel)

    def merge(self, a: int, b: int, label=None) -> "InformationStructure":
        """Garble by merging signal columns ``a`` and ``b``."""
        if a == b:
            return self
        keep = [s for s in range(self.S) if s not in (a, b)]
        merged = self.kernel[:, a] + self.kernel[:, b]
        kernel = np.column_stack([self.kernel[:, keep], merged])
        lab = label if label is not None else (self.signals[a], self.signals[b])
        return InformationStructure(tuple(self.signals[s] for s in keep) + (lab,), kernel)


@dataclass(frozen=True, eq=False)
class SignalStats:
    r: np.ndarray
    nu: np.ndarray
    signals: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "r", _frozen(np.asarray(self.r).reshape(-1)))
        nu = np.asarray(self.nu, dtype=float)
        if nu.ndim == 1:
            nu = nu.reshape(-1, 1)
        object.__setattr__(self, "nu", _frozen(nu))
        if not self.signals:
            object.__setattr__(self, "signals", tuple(range(self.r.size)))

    @property
    def S(self) -> int:
        return self.r.size

    @property
    def m(self) -> int:
        return self.nu.shape[1]


def signal_stats(dist: ValueDistribution, info: InformationStructure) -> SignalStats:
    if info.kernel.shape[0] != dist.K:
        raise InvalidStructure(
            f"kernel has {info.kernel.shape[0]} rows, distribution has {dist.K} points"
        )
    joint = dist.prob[:, None] * info.kernel  # K x S
    r = joint.sum(axis=0)
    nu = (joint.T @ dist.support) / r[:, None]
    return SignalStats(r, nu, info.signals)


def optimal_welfare(dist: ValueDistribution) -> float:
    return float(dist.prob @ dist.support.max(axis=1))


def buyer_choice(
    nu: Sequence[float],
    prices: Sequence[float],
    tie_break: str = SELLER_OPTIMAL,
    tol: float = BUYER_TOL,
) -> tuple[int | None, float]:
    """Product the buyer picks at posterior mean ``nu``, and the price paid.

    Infinite prices mean the product is not offered. The buyer buys at zero
    surplus. Among (near-)maximal options the seller-optimal rule takes the
    highest price, then the lowest index. ``tol`` is relative to the size of
    the numbers involved.
    """
    nu = np.asarray(nu, dtype=float)
    prices = np.asarray(prices, dtype=float)
    offered = np.isfinite(prices)
    if not offered.any():
        return None, 0.0
    surplus = np.full(nu.shape, -math.inf)
    surplus[offered] = nu[offered] - prices[offered]
    scale = max(1.0, float(np.max(np.abs(nu))), float(np.max(np.abs(prices[offered]))))
    eps = tol * scale
    best = surplus.max()
    if best < -eps:
        return None, 0.0
    ties = np.flatnonzero(surplus >= best - eps)
    if tie_break == SELLER_OPTIMAL:
        top_price = prices[ties].max()
        ties = ties[prices[ties] >= top_price]
    elif tie_break != LOWEST_INDEX:
        raise ValueError(f"unknown tie-break rule {tie_break!r}")
    i = int(ties[0])
    return i, float(prices[i])


@dataclass(frozen=True, eq=False)
class Mechanism:
    info: InformationStructure
    alloc: np.ndarray
    price: np.ndarray

    def __post_init__(self):
        alloc = np.asarray(self.alloc, dtype=float)
        price = np.asarray(self.price, dtype=float).reshape(-1)
        if alloc.ndim != 2 or alloc.shape[0] != self.info.S or price.size != self.info.S:
            raise InvalidStructure("allocation/payment shape does not match signals")
        if np.any(alloc < -PROB_TOL) or np.any(alloc > 1 + PROB_TOL):
            raise InvalidStructure("allocation probabilities must lie in [0, 1]")
        if np.any(alloc.sum(axis=1) > 1 + PROB_TOL):
            raise InvalidStructure("unit demand: allocation must sum to at most 1")
        object.__setattr__(self, "alloc", _frozen(np.clip(alloc, 0.0, 1.0)))
        object.__setattr__(self, "price", _frozen(price))


@dataclass(frozen=True, eq=False)
class PricingMechanism:
    info: InformationStructure
    prices: np.ndarray
    tie_break: str = SELLER_OPTIMAL

    def __post_init__(self):
        prices = np.asarray(self.prices, dtype=float).reshape(-1)
        if np.any(np.isnan(prices)) or np.any(prices < 0):
            raise InvalidStructure("prices must be non-negative (inf = not offered)")
        if self.tie_break not in TIE_BREAKS:
            raise ValueError(f"unknown tie-break rule {self.tie_break!r}")
        object.__setattr__(self, "prices", _frozen(prices))


def induce_mechanism(dist: ValueDistribution, pricing: PricingMechanism) -> Mechanism:
    if pricing.prices.size != dist.m:
        raise InvalidStructure(f"{pricing.prices.size} prices for {dist.m} products")
    stats = signal_stats(dist, pricing.info)
    alloc = np.zeros((stats.S, dist.m))
    pay = np.zeros(stats.S)
    for s in range(stats.S):
        i, p = buyer_choice(stats.nu[s], pricing.prices, pricing.tie_break)
        if i is not None:
            alloc[s, i] = 1.0
            pay[s] = p
    return Mechanism(pricing.info, alloc, pay)


@dataclass
class AuditReport:
    ic_violations: list[tuple[Any, Any, float]]
    ir_violations: list[tuple[Any, float]]
    max_violation: float
    tol: float

    @property
    def ok(self) -> bool:
        return not self.ic_violations and not self.ir_violations


def interim_utilities(stats: SignalStats, mech: Mechanism) -> np.ndarray:
    """U[s, t]: utility at posterior of signal s from taking menu item t."""
    return stats.nu @ mech.alloc.T - mech.price[None, :]


def audit_ic_ir(dist: ValueDistribution, mech: Mechanism, tol: float = DEFAULT_TOL) -> AuditReport:
    stats = signal_stats(dist, mech.info)
    U = interim_utilities(stats, mech)
    scale = max(1.0, float(np.max(np.abs(stats.nu))), float(np.max(np.abs(mech.price))))
    eps = tol * scale
    own = np.diag(U)
    gain = U - own[:, None]
    ic = []
    ir = []
    worst = 0.0
    labels = mech.info.signals
    for s in range(stats.S):
        for t in range(stats.S):
            if s != t and gain[s, t] > 0:
                worst = max(worst, gain[s, t])
                if gain[s, t] > eps:
                    ic.append((labels[s], labels[t], float(gain[s, t])))
        if own[s] < 0:
            worst = max(worst, -own[s])
            if -own[s] > eps:
                ir.append((labels[s], float(own[s])))
    return AuditReport(ic, ir, float(worst), eps)


def _checked_stats(dist, mech, tol):
    report = audit_ic_ir(dist, mech, tol)
    if not report.ok:
        raise RejectedMechanism(report)
    return signal_stats(dist, mech.info)


def revenue(dist: ValueDistribution, mech: Mechanism, tol: float = DEFAULT_TOL) -> float:
    stats = _checked_stats(dist, mech, tol)
    return float(stats.r @ mech.price)


def welfare(dist: ValueDistribution, mech: Mechanism, tol: float = DEFAULT_TOL) -> float:
    _checked_stats(dist, mech, tol)
    # true values, not posteriors
    per_point = dist.support @ mech.alloc.T  # K x S
    return float(np.sum(dist.prob[:, None] * mech.info.kernel * per_point))


def pricing_revenue(dist: ValueDistribution, pricing: PricingMechanism) -> float:
    return revenue(dist, induce_mechanism(dist, pricing))

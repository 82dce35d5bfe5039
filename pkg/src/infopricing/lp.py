"""Dense two-phase simplex.

Small, dependency-free LP core used by the pooling program, the optimal-menu
program and the pricing oracles. Problems here have at most a few hundred
variables, so a dense numpy tableau is plenty.

Entering variable: largest reduced cost (lowest index on ties). After a run of
degenerate pivots the solver switches to Bland's rule for the rest of the
phase, which rules out cycling. The leaving row is chosen by the minimum
ratio, ties broken by the smallest basic-variable index, so the returned
vertex is a deterministic function of the input.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

__all__ = ["LinearProgram", "LPResult", "lp_solve", "LPError"]

LE, EQ, GE = "<=", "==", ">="
_SENSES = {LE, EQ, GE, "=", "<", ">"}
_CANON = {"=": EQ, "<": LE, ">": GE}

_DEGENERATE_SWITCH = 50
# pivots smaller than this fraction of the column are treated as zero
_PIVOT_REL = 1e-9


class LPError(ValueError):
    """Malformed linear program."""


@dataclass(frozen=True)
class LinearProgram:
    """maximize objective @ x  s.t.  A x (senses) rhs,  lo <= x <= hi.

    ``bounds`` holds one ``(lo, hi)`` pair per variable; ``None`` or an
    infinite float means unbounded on that side. Omitted bounds default to
    ``x >= 0``.
    """

    objective: Sequence[float]
    A: Sequence[Sequence[float]]
    senses: Sequence[str]
    rhs: Sequence[float]
    bounds: Sequence[tuple[float | None, float | None]] | None = None
    minimize: bool = False

    def arrays(self):
        c = np.asarray(self.objective, dtype=float).reshape(-1)
        n = c.size
        A = np.asarray(self.A, dtype=float)
        if A.size == 0:
            A = A.reshape(0, n)
        if A.ndim != 2 or A.shape[1] != n:
            raise LPError(f"constraint matrix shape {A.shape} does not match {n} variables")
        b = np.asarray(self.rhs, dtype=float).reshape(-1)
        if b.size != A.shape[0] or len(self.senses) != A.shape[0]:
            raise LPError("rhs / senses length does not match number of rows")
        for s in self.senses:
            if s not in _SENSES:
                raise LPError(f"unknown constraint sense {s!r}")
        senses = [_CANON.get(s, s) for s in self.senses]
        if self.bounds is None:
            bounds = [(0.0, math.inf)] * n
        else:
            if len(self.bounds) != n:
                raise LPError("bounds length does not match number of variables")
            bounds = []
            for lo, hi in self.bounds:
                lo = -math.inf if lo is None else float(lo)
                hi = math.inf if hi is None else float(hi)
                if lo > hi:
                    raise LPError(f"empty bound interval [{lo}, {hi}]")
                bounds.append((lo, hi))
        if not (np.all(np.isfinite(c)) and np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise LPError("non-finite coefficient")
        return c, A, senses, b, bounds


@dataclass
class LPResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    value: float = math.nan
    x: np.ndarray = field(default_factory=lambda: np.zeros(0))
    pivots: int = 0

    @property
    def ok(self) -> bool:
        return self.status == "optimal"


class _Tableau:
    def __init__(self, T: np.ndarray, basis: list[int], tol: float):
        self.T = T
        self.basis = basis
        self.tol = tol
        self.pivots = 0

    def pivot(self, row: int, col: int) -> None:
        T = self.T
        T[row] /= T[row, col]
        colv = T[:, col].copy()
        colv[row] = 0.0
        T -= np.outer(colv, T[row])
        T[:, col] = 0.0
        T[row, col] = 1.0
        self.basis[row] = col
        self.pivots += 1

    def run(self, allowed: np.ndarray, max_iter: int) -> str:
        """Maximize the objective stored (as reduced costs) in the last row."""
        T = self.T
        tol = self.tol
        bland = False
        degenerate = 0
        for _ in range(max_iter):
            red = T[-1, :-1]
            cand = np.flatnonzero((red > tol) & allowed)
            if cand.size == 0:
                return "optimal"
            if bland:
                col = int(cand[0])
            else:
                col = int(cand[np.argmax(red[cand])])
            colv = T[:-1, col]
            pos = np.flatnonzero(colv > max(tol, _PIVOT_REL * float(np.max(np.abs(colv)))))
            if pos.size == 0:
                return "unbounded"
            ratios = np.maximum(T[pos, -1], 0.0) / colv[pos]
            best = ratios.min()
            ties = pos[ratios <= best + tol * max(1.0, abs(best))]
            # largest pivot among near-ties keeps the tableau stable
            piv = colv[ties]
            ties = ties[piv >= piv.max() * (1 - 1e-12)]
            row = int(min(ties, key=lambda r: self.basis[r]))
            if best <= tol:
                degenerate += 1
                if degenerate >= _DEGENERATE_SWITCH:
                    bland = True
            else:
                degenerate = 0
            self.pivot(row, col)
        raise RuntimeError("simplex iteration limit reached")


def _standard_form(c, A, senses, b, bounds):
    """Map bounded/free variables onto y >= 0.

    Returns (c_y, A_y, senses, b_y, const, back) where x = back_M @ y + back_c.
    """
    n = c.size
    cols = []  # (orig var, sign)
    offset = np.zeros(n)
    extra_rows = []
    for j, (lo, hi) in enumerate(bounds):
        if math.isfinite(lo):
            offset[j] = lo
            cols.append((j, 1.0))
            if math.isfinite(hi):
                extra_rows.append((len(cols) - 1, hi - lo))
        elif math.isfinite(hi):
            offset[j] = hi
            cols.append((j, -1.0))
        else:
            cols.append((j, 1.0))
            cols.append((j, -1.0))
    ny = len(cols)
    M = np.zeros((n, ny))
    for k, (j, s) in enumerate(cols):
        M[j, k] = s
    A_y = A @ M
    b_y = b - A @ offset
    c_y = c @ M
    const = float(c @ offset)
    senses = list(senses)
    if extra_rows:
        rows = np.zeros((len(extra_rows), ny))
        for r, (k, ub) in enumerate(extra_rows):
            rows[r, k] = 1.0
        A_y = np.vstack([A_y, rows])
        b_y = np.concatenate([b_y, [ub for _, ub in extra_rows]])
        senses += [LE] * len(extra_rows)
    return c_y, A_y, senses, b_y, const, M, offset


def lp_solve(lp: LinearProgram, tol: float = 1e-11, max_iter: int = 50_000) -> LPResult:
    """Solve ``lp`` and return status, optimum and a primal vertex."""
    c, A, senses, b, bounds = lp.arrays()
    if lp.minimize:
        c = -c
    c_y, A_y, senses, b_y, const, M, offset = _standard_form(c, A, senses, b, bounds)
    m, ny = A_y.shape

    # rows with b < 0 are negated so every rhs is non-negative
    A_y = A_y.copy()
    b_y = b_y.copy()
    senses = list(senses)
    for i in range(m):
        if b_y[i] < 0:
            A_y[i] *= -1.0
            b_y[i] *= -1.0
            senses[i] = {LE: GE, GE: LE, EQ: EQ}[senses[i]]
        # equilibrate rows; does not move the feasible set
        scale = np.max(np.abs(A_y[i])) if ny else 0.0
        if scale > 0:
            A_y[i] /= scale
            b_y[i] /= scale

    n_slack = sum(1 for s in senses if s != EQ)
    n_art = sum(1 for s in senses if s != LE)
    width = ny + n_slack + n_art
    T = np.zeros((m + 1, width + 1), dtype=np.longdouble)
    T[:m, :ny] = A_y
    T[:m, -1] = b_y
    basis = [-1] * m
    si = ny
    ai = ny + n_slack
    art_cols = []
    for i, s in enumerate(senses):
        if s == LE:
            T[i, si] = 1.0
            basis[i] = si
            si += 1
        elif s == GE:
            T[i, si] = -1.0
            si += 1
            T[i, ai] = 1.0
            basis[i] = ai
            art_cols.append(ai)
            ai += 1
        else:
            T[i, ai] = 1.0
            basis[i] = ai
            art_cols.append(ai)
            ai += 1

    tab = _Tableau(T, basis, tol)
    allowed = np.ones(width, dtype=bool)

    if art_cols:
        # phase 1: maximize -sum(artificials)
        T[-1, :] = 0.0
        for i in range(m):
            if basis[i] in art_cols:
                T[-1, :] += T[i, :]
        T[-1, art_cols] = 0.0
        status = tab.run(allowed, max_iter)
        if T[-1, -1] > 1e-7 * max(1.0, float(np.max(np.abs(b_y))) if m else 1.0):
            return LPResult("infeasible", pivots=tab.pivots)
        art_set = set(art_cols)
        drop = []
        for i in range(m):
            if basis[i] in art_set:
                row = T[i, :ny + n_slack]
                nz = np.flatnonzero(np.abs(row) > tol)
                if nz.size:
                    tab.pivot(i, int(nz[0]))
                else:
                    drop.append(i)
        if drop:
            keep = [i for i in range(m) if i not in drop] + [m]
            T = T[keep]
            tab.T = T
            tab.basis = [basis[i] for i in range(m) if i not in drop]
            basis = tab.basis
            m = len(basis)
        allowed = allowed.copy()
        allowed[art_cols] = False

    # phase 2 objective row: reduced costs of c_y given the current basis
    obj = np.zeros(width)
    cmax = float(np.max(np.abs(c_y))) if ny else 0.0
    obj[:ny] = c_y / cmax if cmax > 0 else c_y  # scale-free optimality test
    T[-1, :-1] = obj
    T[-1, -1] = 0.0
    for i, bv in enumerate(basis):
        if obj[bv] != 0.0:
            T[-1, :] -= obj[bv] * T[i, :]
    # reduced cost row stores c_j - z_j; sign flip makes run() maximize
    status = tab.run(allowed, max_iter)
    T = tab.T
    if status == "unbounded":
        return LPResult("unbounded", value=math.inf if not lp.minimize else -math.inf, pivots=tab.pivots)

    y = np.zeros(width)
    for i, bv in enumerate(tab.basis):
        y[bv] = T[i, -1]
    x = M @ y[:ny].astype(float) + offset
    c_orig = np.asarray(lp.objective, dtype=float)
    value = float(c_orig @ x)
    return LPResult("optimal", value=value, x=x, pivots=tab.pivots)

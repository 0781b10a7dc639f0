"""Dense two-phase primal simplex for small linear programs.

Solves::

    maximize    c @ x
    subject to  A @ x <= b
                E @ x == f
                x >= 0

and always returns a basic (vertex) solution. Pivoting uses Dantzig's
largest-reduced-cost rule and falls back to Bland's rule once
``50 * d`` consecutive degenerate pivots have been made.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

PIVOT_TOL = 1e-10
FEAS_TOL = 1e-9
OPT_TOL = 1e-9
MAX_ITER = 10**6


class LpError(RuntimeError):
    """The solver could not produce a trustworthy answer."""


class LpIterationLimit(LpError):
    pass


class LpStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


def _as_matrix(a, d):
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        return np.zeros((0, d))
    return np.atleast_2d(a)


@dataclass(frozen=True, eq=False)
class CanonicalLp:
    c: np.ndarray
    A: np.ndarray = None
    b: np.ndarray = None
    E: np.ndarray = None
    f: np.ndarray = None

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float).ravel()
        d = c.size
        A = _as_matrix(self.A if self.A is not None else [], d)
        E = _as_matrix(self.E if self.E is not None else [], d)
        b = np.asarray(self.b if self.b is not None else [], dtype=float).ravel()
        f = np.asarray(self.f if self.f is not None else [], dtype=float).ravel()
        if A.shape != (b.size, d) or E.shape != (f.size, d):
            raise ValueError(
                f"inconsistent LP shapes: c({d}), A{A.shape}, b({b.size}), E{E.shape}, f({f.size})")
        for name, arr in (("c", c), ("A", A), ("b", b), ("E", E), ("f", f)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"LP data {name} contains non-finite entries")
        for name, arr in (("c", c), ("A", A), ("b", b), ("E", E), ("f", f)):
            object.__setattr__(self, name, arr)

    @property
    def d(self) -> int:
        return self.c.size

    def residual(self, x) -> float:
        """Largest constraint violation of ``x``, including nonnegativity."""
        x = np.asarray(x, dtype=float)
        parts = [np.maximum(-x, 0.0)]
        if self.b.size:
            parts.append(np.maximum(self.A @ x - self.b, 0.0))
        if self.f.size:
            parts.append(np.abs(self.E @ x - self.f))
        return float(max(p.max(initial=0.0) for p in parts))


@dataclass(frozen=True, eq=False)
class LpResult:
    status: LpStatus
    x: np.ndarray | None = None
    objective: float | None = None
    basis: tuple[int, ...] = ()
    iterations: int = 0
    primal_residual: float = float("nan")
    max_reduced_cost: float = float("nan")
    bland: bool = field(default=False)

    @property
    def optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL


class _Tableau:
    """Row-reduced tableau ``[T | rhs]`` with an explicit basis and cost row."""

    def __init__(self, T, rhs, basis):
        self.T = T
        self.rhs = rhs
        self.basis = basis
        self.iterations = 0
        self.degenerate_run = 0
        self.bland = False

    def pivot(self, r, c, cost):
        T = self.T
        piv = T[r, c]
        T[r] /= piv
        self.rhs[r] /= piv
        col = T[:, c].copy()
        col[r] = 0.0
        T -= np.outer(col, T[r])
        self.rhs -= col * self.rhs[r]
        T[:, c] = 0.0
        T[r, c] = 1.0
        cost -= cost[c] * T[r]
        cost[c] = 0.0
        self.basis[r] = c

    def reduced_costs(self, c_full):
        return c_full - c_full[self.basis] @ self.T

    def optimize(self, c_full, allowed, d, max_iter):
        """Maximize ``c_full`` over columns flagged in ``allowed``."""
        cost = self.reduced_costs(c_full)
        bland_after = 50 * max(d, 1)
        while True:
            candidates = np.flatnonzero(allowed & (cost > OPT_TOL))
            if candidates.size == 0:
                return LpStatus.OPTIMAL
            if self.iterations >= max_iter:
                raise LpIterationLimit(f"simplex exceeded {max_iter} iterations")
            if self.bland:
                c = candidates[0]
            else:
                c = candidates[np.argmax(cost[candidates])]
            col = self.T[:, c]
            rows = np.flatnonzero(col > PIVOT_TOL)
            if rows.size == 0:
                return LpStatus.UNBOUNDED
            ratios = np.maximum(self.rhs[rows], 0.0) / col[rows]
            best = ratios.min()
            ties = rows[ratios <= best + PIVOT_TOL * max(1.0, abs(best))]
            r = ties[np.argmin(self.basis[ties])]
            if best <= PIVOT_TOL:
                self.degenerate_run += 1
                if self.degenerate_run > bland_after:
                    self.bland = True
            else:
                self.degenerate_run = 0
            self.pivot(r, c, cost)
            self.iterations += 1


def solve_lp(lp: CanonicalLp, max_iter: int = MAX_ITER) -> LpResult:
    """Solve ``lp`` to a vertex; infeasibility and unboundedness are statuses."""
    d = lp.d
    r_in, r_eq = lp.b.size, lp.f.size
    rows = r_in + r_eq

    # columns: x (d) | slacks (r_in) | artificials (n_art)
    sign_in = np.where(lp.b < 0, -1.0, 1.0)
    sign_eq = np.where(lp.f < 0, -1.0, 1.0)
    needs_art = np.concatenate([sign_in < 0, np.ones(r_eq, dtype=bool)])
    art_rows = np.flatnonzero(needs_art)
    n_art = art_rows.size
    width = d + r_in + n_art

    T = np.zeros((rows, width))
    T[:r_in, :d] = lp.A * sign_in[:, None]
    T[:r_in, d:d + r_in] = np.diag(sign_in)
    T[r_in:, :d] = lp.E * sign_eq[:, None]
    rhs = np.concatenate([lp.b * sign_in, lp.f * sign_eq])
    basis = np.empty(rows, dtype=int)
    basis[:r_in] = d + np.arange(r_in)
    for a, r in enumerate(art_rows):
        T[r, d + r_in + a] = 1.0
        basis[r] = d + r_in + a

    tab = _Tableau(T, rhs, basis)
    is_art = np.zeros(width, dtype=bool)
    is_art[d + r_in:] = True

    if n_art:
        phase1 = np.where(is_art, -1.0, 0.0)
        status = tab.optimize(phase1, np.ones(width, dtype=bool), d, max_iter)
        infeas = float(np.sum(tab.rhs[is_art[tab.basis]]))
        scale = max(1.0, float(np.abs(rhs).max(initial=0.0)))
        if status is not LpStatus.OPTIMAL or infeas > FEAS_TOL * scale:
            return LpResult(LpStatus.INFEASIBLE, iterations=tab.iterations, bland=tab.bland)
        _drive_out_artificials(tab, is_art)
        keep = ~is_art
        tab.T = tab.T[:, keep]
        is_art = is_art[keep]

    c_full = np.zeros(tab.T.shape[1])
    c_full[:d] = lp.c
    status = tab.optimize(c_full, np.ones(c_full.size, dtype=bool), d, max_iter)
    if status is LpStatus.UNBOUNDED:
        return LpResult(LpStatus.UNBOUNDED, iterations=tab.iterations, bland=tab.bland)

    x = np.zeros(d)
    in_x = tab.basis < d
    x[tab.basis[in_x]] = np.maximum(tab.rhs[in_x], 0.0)
    reduced = tab.reduced_costs(c_full)
    return LpResult(
        LpStatus.OPTIMAL,
        x=x,
        objective=float(lp.c @ x),
        basis=tuple(int(v) for v in tab.basis),
        iterations=tab.iterations,
        primal_residual=lp.residual(x),
        max_reduced_cost=float(reduced.max(initial=0.0)),
        bland=tab.bland,
    )


def _drive_out_artificials(tab: _Tableau, is_art):
    """Pivot zero-level artificials out of the basis; drop redundant rows."""
    r = 0
    while r < tab.T.shape[0]:
        if is_art[tab.basis[r]]:
            row = tab.T[r]
            cand = np.flatnonzero(~is_art & (np.abs(row) > PIVOT_TOL))
            if cand.size:
                c = cand[np.argmax(np.abs(row[cand]))]
                dummy = np.zeros(tab.T.shape[1])
                tab.pivot(r, c, dummy)
            else:
                tab.T = np.delete(tab.T, r, axis=0)
                tab.rhs = np.delete(tab.rhs, r)
                tab.basis = np.delete(tab.basis, r)
                continue
        r += 1


def dump_lp(lp: CanonicalLp, fh, digits: int = 12) -> None:
    """Write ``lp`` in a plain fixed-point text format for offline inspection."""
    fmt = f"{{:.{digits}f}}"

    def line(values):
        return " ".join(fmt.format(v) for v in values)

    fh.write(f"lp d={lp.d} ineq={lp.b.size} eq={lp.f.size}\n")
    fh.write("max " + line(lp.c) + "\n")
    for row, rhs in zip(lp.A, lp.b):
        fh.write("le " + line(row) + " | " + fmt.format(rhs) + "\n")
    for row, rhs in zip(lp.E, lp.f):
        fh.write("eq " + line(row) + " | " + fmt.format(rhs) + "\n")

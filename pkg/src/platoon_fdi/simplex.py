"""Dense two-phase tableau simplex for box-bounded linear programs.

Solves::

    minimize    c @ x
    subject to  A_ub @ x <= b_ub
                lower <= x <= upper

``lower`` must be finite; ``upper`` entries may be ``inf``. Phase 1 minimises
the sum of artificial variables to find a basic feasible point, phase 2
optimises ``c`` from there. Dantzig pricing is used until a run of degenerate
pivots is seen, after which Bland's rule takes over to rule out cycling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

PIVOT_TOL = 1e-9
DEGENERATE_RUN = 50


@dataclass
class LPResult:
    status: str
    x: np.ndarray | None = None
    objective: float | None = None
    iterations: int = 0


class _Tableau:
    def __init__(self, table: np.ndarray, basis: list[int]):
        self.t = table
        self.basis = basis
        self.iterations = 0

    def pivot(self, row: int, col: int) -> None:
        t = self.t
        t[row] /= t[row, col]
        column = t[:, col].copy()
        column[row] = 0.0
        t -= np.outer(column, t[row])
        t[:, col] = 0.0
        t[row, col] = 1.0
        self.basis[row] = col
        self.iterations += 1

    def run(self, ncols: int, max_iter: int) -> str:
        """Iterate on the bottom (reduced cost) row over the first ``ncols`` columns."""
        t = self.t
        m = t.shape[0] - 1
        degenerate = 0
        while True:
            if self.iterations >= max_iter:
                raise RuntimeError(f"simplex exceeded {max_iter} iterations")
            costs = t[-1, :ncols]
            if degenerate < DEGENERATE_RUN:
                col = int(np.argmin(costs))
                if costs[col] >= -PIVOT_TOL:
                    return OPTIMAL
            else:
                candidates = np.flatnonzero(costs < -PIVOT_TOL)
                if candidates.size == 0:
                    return OPTIMAL
                col = int(candidates[0])

            entries = t[:m, col]
            rhs = t[:m, -1]
            rows = np.flatnonzero(entries > PIVOT_TOL)
            if rows.size == 0:
                return UNBOUNDED
            ratios = rhs[rows] / entries[rows]
            best = ratios.min()
            tied = rows[ratios <= best + PIVOT_TOL * max(1.0, abs(best))]
            # lowest basic index among ties (Bland)
            row = int(min(tied, key=lambda r: self.basis[r]))
            degenerate = degenerate + 1 if best <= PIVOT_TOL else 0
            self.pivot(row, col)


def solve_lp(c, a_ub, b_ub, lower, upper, max_iter: int = 50_000) -> LPResult:
    c = np.asarray(c, dtype=float)
    nvar = c.size
    a_ub = np.asarray(a_ub, dtype=float).reshape(-1, nvar)
    b_ub = np.asarray(b_ub, dtype=float).reshape(-1)
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    if not np.isfinite(lower).all():
        raise ValueError("lower bounds must be finite")
    if (upper < lower).any():
        return LPResult(INFEASIBLE)

    # shift to y = x - lower >= 0; finite upper bounds become rows
    capped = np.flatnonzero(np.isfinite(upper))
    cap_rows = np.zeros((capped.size, nvar))
    cap_rows[np.arange(capped.size), capped] = 1.0
    a = np.vstack([a_ub, cap_rows])
    b = np.concatenate([b_ub - a_ub @ lower, upper[capped] - lower[capped]])
    m = a.shape[0]

    negative = np.flatnonzero(b < 0)
    nart = negative.size
    ncols = nvar + m + nart
    table = np.zeros((m + 1, ncols + 1))
    table[:m, :nvar] = a
    table[:m, nvar:nvar + m] = np.eye(m)
    table[:m, -1] = b
    table[negative, :] *= -1.0
    basis = list(range(nvar, nvar + m))
    for r, row in enumerate(negative):
        table[row, nvar + m + r] = 1.0
        basis[row] = nvar + m + r

    tab = _Tableau(table, basis)
    if nart:
        table[-1, :] = -table[negative, :].sum(axis=0)
        table[-1, nvar + m:ncols] = 0.0
        tab.run(ncols, max_iter)
        infeasibility = -table[-1, -1]
        scale = max(1.0, float(np.abs(b).max()))
        if infeasibility > 1e-9 * scale:
            return LPResult(INFEASIBLE, iterations=tab.iterations)
        _drive_out_artificials(tab, nvar + m)

    # phase 2 on the structural + slack columns
    table = tab.t
    keep = [r for r in range(table.shape[0] - 1) if tab.basis[r] < nvar + m]
    table = np.vstack([table[keep][:, list(range(nvar + m)) + [ncols]], np.zeros(nvar + m + 1)])
    tab.t = table
    tab.basis = [tab.basis[r] for r in keep]
    cost = np.concatenate([c, np.zeros(m)])
    table[-1, :-1] = cost
    for r, var in enumerate(tab.basis):
        if cost[var] != 0.0:
            table[-1] -= cost[var] * table[r]
    status = tab.run(nvar + m, max_iter)
    if status == UNBOUNDED:
        return LPResult(UNBOUNDED, iterations=tab.iterations)

    y = _basic_solution(tab, a, b, nvar, keep)
    x = lower + y[:nvar]
    # round-off past a bound snaps back onto it
    over = (x > upper) & (x - upper <= 1e-9 * np.maximum(1.0, np.abs(upper)))
    x[over] = upper[over]
    return LPResult(OPTIMAL, x, float(c @ x), tab.iterations)


def _drive_out_artificials(tab: _Tableau, first_artificial: int) -> None:
    t = tab.t
    for r in range(t.shape[0] - 1):
        if tab.basis[r] < first_artificial:
            continue
        row = t[r, :first_artificial]
        candidates = np.flatnonzero(np.abs(row) > PIVOT_TOL)
        if candidates.size:
            tab.pivot(r, int(candidates[np.argmax(np.abs(row[candidates]))]))
        # otherwise the row is redundant; it is dropped before phase 2


def _basic_solution(tab: _Tableau, a, b, nvar: int, rows) -> np.ndarray:
    """Recover basic values from the original data for accuracy, falling back to the tableau."""
    m = a.shape[0]
    y = np.zeros(nvar + m)
    basis = tab.basis
    standard = np.hstack([a, np.eye(m)])
    try:
        vals = np.linalg.solve(standard[rows][:, basis], b[rows])
    except np.linalg.LinAlgError:
        vals = tab.t[:-1, -1]
    if not np.isfinite(vals).all():
        vals = tab.t[:-1, -1]
    y[basis] = vals
    y[(y < 0) & (y > -1e-9)] = 0.0
    return y

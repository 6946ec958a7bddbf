"""Dense two-phase tableau simplex with Bland's anti-cycling rule.

Solves  max/min c.x  s.t.  A_ub x <= b_ub,  A_eq x = b_eq,  x >= 0.
Problem sizes here are a few thousand variables at most, so a dense
tableau is adequate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

FEAS_TOL = 1e-9
OPT_TOL = 1e-9
GAP_TOL = 1e-7


class LPError(RuntimeError):
    pass


class Infeasible(LPError):
    pass


class Unbounded(LPError):
    pass


@dataclass(frozen=True)
class LPResult:
    x: np.ndarray
    fun: float
    dual_eq: np.ndarray
    dual_ub: np.ndarray
    duality_gap: float
    iterations: int


def _pivot(T: np.ndarray, row: int, col: int) -> None:
    T[row] /= T[row, col]
    col_vals = T[:, col].copy()
    col_vals[row] = 0.0
    T -= np.outer(col_vals, T[row])


def _run(T: np.ndarray, basis: list[int], allowed: int, max_iter: int) -> int:
    """Minimize the objective held in the last row of T over columns < allowed.

    The last row stores reduced costs, last column the right-hand side.
    """
    m = T.shape[0] - 1
    for it in range(max_iter):
        cost = T[-1, :allowed]
        entering = np.flatnonzero(cost < -OPT_TOL)
        if entering.size == 0:
            return it
        col = int(entering[0])
        column = T[:m, col]
        pos = column > FEAS_TOL
        if not pos.any():
            raise Unbounded("objective unbounded along entering column")
        ratios = np.full(m, np.inf)
        ratios[pos] = T[:m, -1][pos] / column[pos]
        best = ratios.min()
        ties = np.flatnonzero(ratios <= best + FEAS_TOL * max(1.0, abs(best)))
        row = int(min(ties, key=lambda r: basis[r]))
        _pivot(T, row, col)
        basis[row] = col
    raise LPError(f"simplex did not converge in {max_iter} iterations")


def linprog(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, maximize=False, max_iter=100_000) -> LPResult:
    c = np.asarray(c, dtype=float)
    n = c.size
    A_ub = np.zeros((0, n)) if A_ub is None else np.atleast_2d(np.asarray(A_ub, dtype=float))
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float)
    A_eq = np.zeros((0, n)) if A_eq is None else np.atleast_2d(np.asarray(A_eq, dtype=float))
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float)
    m_ub, m_eq = A_ub.shape[0], A_eq.shape[0]
    m = m_ub + m_eq

    # standard form: [A_ub I; A_eq 0] [x; s] = b, rows flipped so b >= 0
    n_std = n + m_ub
    A = np.zeros((m, n_std))
    A[:m_ub, :n] = A_ub
    A[:m_ub, n:] = np.eye(m_ub)
    A[m_ub:, :n] = A_eq
    b = np.concatenate([b_ub, b_eq])
    flip = np.where(b < 0, -1.0, 1.0)
    A *= flip[:, None]
    b = b * flip
    cost = np.concatenate([-c if maximize else c, np.zeros(m_ub)])

    # phase 1: artificials on every row
    T = np.zeros((m + 1, n_std + m + 1))
    T[:m, :n_std] = A
    T[:m, n_std : n_std + m] = np.eye(m)
    T[:m, -1] = b
    T[-1, :n_std] = -A.sum(axis=0)
    T[-1, -1] = -b.sum()
    basis = list(range(n_std, n_std + m))
    iters = _run(T, basis, n_std + m, max_iter)
    if -T[-1, -1] > FEAS_TOL * max(1.0, np.abs(b).sum()):
        raise Infeasible(f"phase 1 residual {-T[-1, -1]:.3e}")

    # drive artificials out of the basis; a row whose structural part is zero
    # is redundant and stays inert with its artificial basic at zero
    for r in range(m):
        if basis[r] >= n_std:
            row = np.abs(T[r, :n_std])
            j = int(row.argmax())
            if row[j] > 1e-7:
                _pivot(T, r, j)
                basis[r] = j

    # phase 2, artificial columns kept but barred from entering
    full_cost = np.concatenate([cost, np.zeros(m)])
    T[-1, :] = 0.0
    T[-1, :-1] = full_cost
    for r, j in enumerate(basis):
        T[-1] -= full_cost[j] * T[r]
    iters += _run(T, basis, n_std, max_iter)

    x_std = np.zeros(n_std)
    for r, j in enumerate(basis):
        if j < n_std:
            x_std[j] = T[r, -1]
    x = x_std[:n]
    primal = float(cost @ x_std)

    # an artificial column started as a unit vector with zero cost, so its
    # reduced cost is minus the row dual
    y = -T[-1, n_std : n_std + m]
    reduced = cost - A.T @ y
    if reduced.min(initial=0.0) < -1e-7:
        raise LPError(f"dual infeasible at reported optimum (min reduced cost {reduced.min():.3e})")
    gap = abs(primal - float(b @ y))
    if gap > GAP_TOL * max(1.0, abs(primal)):
        raise LPError(f"duality gap {gap:.3e} exceeds tolerance")

    # undo the row flips and the max->min sign so duals refer to the caller's problem
    y = y * flip * (-1.0 if maximize else 1.0)
    fun = -primal if maximize else primal
    return LPResult(x, fun, y[m_ub:], y[:m_ub], gap, iters)

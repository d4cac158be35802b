"""Linear assignment (Hungarian method) and a dense two-phase tableau simplex."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment


class SolverError(RuntimeError):
    pass


class NonFinite(SolverError):
    pass


class Infeasible(SolverError):
    pass


class Unbounded(SolverError):
    pass


class IterationLimit(SolverError):
    pass


def assignment(cost) -> tuple[list[int], float]:
    """Minimum-cost perfect matching on a square matrix.

    Returns ``(perm, total)`` with row ``i`` assigned to column ``perm[i]``. The
    total is re-summed from the input entries, so an all-zero optimal matching
    reports exactly 0. Entries may be floats or Fractions; arithmetic follows the
    input type.
    """
    rows = [list(r) for r in (cost.tolist() if isinstance(cost, np.ndarray) else cost)]
    m = len(rows)
    if any(len(r) != m for r in rows):
        raise ValueError("cost matrix must be square")
    if m == 0:
        return [], 0.0
    for r in rows:
        for c in r:
            if isinstance(c, float) and not math.isfinite(c):
                raise NonFinite("cost matrix has a non-finite entry")
    if m == 1:
        return [0], rows[0][0]

    # Shortest augmenting path with row/column potentials, 1-based with a dummy 0.
    inf = math.inf
    zero = rows[0][0] - rows[0][0]
    u = [zero] * (m + 1)
    v = [zero] * (m + 1)
    match_col = [0] * (m + 1)
    way = [0] * (m + 1)
    for i in range(1, m + 1):
        match_col[0] = i
        j0 = 0
        minv = [inf] * (m + 1)
        used = [False] * (m + 1)
        while True:
            used[j0] = True
            i0 = match_col[j0]
            row = rows[i0 - 1]
            ui0 = u[i0]
            delta = inf
            j1 = 0
            for j in range(1, m + 1):
                if not used[j]:
                    cur = row[j - 1] - ui0 - v[j]
                    if cur < minv[j]:
                        minv[j] = cur
                        way[j] = j0
                    if minv[j] < delta:
                        delta = minv[j]
                        j1 = j
            for j in range(m + 1):
                if used[j]:
                    u[match_col[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if match_col[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            match_col[j0] = match_col[j1]
            j0 = j1
    perm = [0] * m
    for j in range(1, m + 1):
        perm[match_col[j] - 1] = j - 1
    total = sum(rows[i][perm[i]] for i in range(m))
    return perm, total


def assignment_cost(cost) -> float:
    """Optimal value only, via the compiled solver; the hot path of the implicit forest distances.

    Kept apart from ``assignment`` so that the explicit-forest routes, which
    use the pure-Python solver, cross-check this one.
    """
    mat = np.asarray(cost, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError("cost matrix must be square")
    if mat.size == 0:
        return 0.0
    if not np.isfinite(mat).all():
        raise NonFinite("cost matrix has a non-finite entry")
    r, c = linear_sum_assignment(mat)
    return float(mat[r, c].sum())


@dataclass
class LpProblem:
    """minimize c.x  subject to  A_eq x = b_eq,  A_ub x <= b_ub,  0 <= x <= upper."""

    c: np.ndarray
    a_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None
    a_ub: np.ndarray | None = None
    b_ub: np.ndarray | None = None
    upper: Sequence[float] | None = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).ravel()
        k = self.c.size
        self.a_eq, self.b_eq = _rows(self.a_eq, self.b_eq, k)
        self.a_ub, self.b_ub = _rows(self.a_ub, self.b_ub, k)
        if self.upper is not None:
            ub = np.asarray(self.upper, dtype=float).ravel()
            if ub.size != k:
                raise ValueError("upper bounds must match the variable count")
            finite = np.flatnonzero(np.isfinite(ub))
            extra = np.zeros((finite.size, k))
            extra[np.arange(finite.size), finite] = 1.0
            self.a_ub = np.vstack([self.a_ub, extra])
            self.b_ub = np.concatenate([self.b_ub, ub[finite]])
            self.upper = None


def _rows(a, b, k: int) -> tuple[np.ndarray, np.ndarray]:
    if a is None:
        return np.zeros((0, k)), np.zeros(0)
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.asarray(b, dtype=float).ravel()
    if a.shape != (b.size, k):
        raise ValueError(f"constraint block has shape {a.shape}, expected ({b.size}, {k})")
    return a, b


@dataclass
class LpSolution:
    value: float
    x: np.ndarray
    duals: np.ndarray = field(repr=False)
    iterations: int = 0


_PIV_TOL = 1e-9
_REFACTOR_EVERY = 64


def _pivot(t: np.ndarray, r: int, col: int) -> None:
    t[r] /= t[r, col]
    factor = t[:, col].copy()
    factor[r] = 0.0
    t -= np.outer(factor, t[r])


def _refactor(t: np.ndarray, a0: np.ndarray, cost: np.ndarray, basis: list[int]) -> None:
    """Rebuild the tableau from the original rows to shed accumulated rounding."""
    m = len(basis)
    body = np.linalg.solve(a0[:, basis], a0)
    t[:m] = body
    t[m] = np.concatenate([cost, [0.0]]) - cost[basis] @ body


def _run_simplex(t: np.ndarray, basis: list[int], allowed: np.ndarray, a0: np.ndarray, cost: np.ndarray,
                 max_iter: int, start: int) -> int:
    """Optimize the tableau whose last row holds reduced costs.

    Pricing is Dantzig's most negative reduced cost; after a run of degenerate
    pivots it switches to Bland's lowest-index rule, which cannot cycle. The
    ratio test is two-pass (Harris): among rows within tolerance of the minimum
    ratio it takes the largest pivot element, or in Bland mode the lowest basic index.
    """
    m = t.shape[0] - 1
    it = start
    degenerate_run = 0
    since_refactor = 0
    while True:
        if it >= max_iter:
            raise IterationLimit(f"simplex exceeded {max_iter} pivots")
        red = t[m, :-1]
        candidates = np.flatnonzero((red < -1e-9) & allowed)
        if candidates.size == 0:
            if since_refactor == 0:
                return it
            _refactor(t, a0, cost, basis)
            since_refactor = 0
            continue
        bland = degenerate_run > 50
        col = int(candidates[0]) if bland else int(candidates[np.argmin(red[candidates])])
        column = t[:m, col]
        pos = np.flatnonzero(column > _PIV_TOL)
        if pos.size == 0:
            if since_refactor:
                _refactor(t, a0, cost, basis)
                since_refactor = 0
                continue
            raise Unbounded("objective is unbounded below")
        rhs = np.maximum(t[pos, -1], 0.0)
        bound = ((rhs + 1e-9) / column[pos]).min()
        near = pos[rhs / column[pos] <= bound]
        if bland:
            r = int(min(near, key=lambda i: basis[i]))
        else:
            r = int(near[np.argmax(column[near])])
        degenerate_run = degenerate_run + 1 if t[r, -1] / t[r, col] <= 1e-12 else 0
        _pivot(t, r, col)
        basis[r] = col
        it += 1
        since_refactor += 1
        if since_refactor >= _REFACTOR_EVERY:
            _refactor(t, a0, cost, basis)
            since_refactor = 0


def _dual_simplex(t: np.ndarray, basis: list[int], allowed: np.ndarray, max_iter: int, start: int) -> int:
    """Restore primal feasibility of a dual-feasible tableau (used after the perturbation is removed)."""
    m = t.shape[0] - 1
    it = start
    while True:
        r = int(np.argmin(t[:m, -1]))
        if t[r, -1] >= -1e-9:
            return it
        if it >= max_iter:
            raise IterationLimit(f"simplex exceeded {max_iter} pivots")
        row = t[r, :-1]
        cand = np.flatnonzero((row < -_PIV_TOL) & allowed)
        if cand.size == 0:
            raise Infeasible("no entering column restores feasibility")
        ratios = np.maximum(t[m, cand], 0.0) / -row[cand]
        col = int(cand[np.argmin(ratios)])
        _pivot(t, r, col)
        basis[r] = col
        it += 1


def solve_lp(p: LpProblem, max_iter: int = 50_000) -> LpSolution:
    """Two-phase dense simplex for small problems (a few hundred rows).

    Rows start from a slack, or from a structural column that appears in that
    row only (a crash column); the rest get artificials. Zero right-hand sides
    make the problems this package builds highly degenerate, so rows that do not
    need an artificial are relaxed by tiny random amounts while pivoting (their
    lone column absorbs the change, so feasibility is kept). The exact
    right-hand side is restored at the end and any resulting infeasibility is
    repaired with dual simplex pivots.
    """
    k = p.c.size
    m_eq, m_ub = p.b_eq.size, p.b_ub.size
    m = m_eq + m_ub
    body = np.zeros((m, k + m_ub + 1))
    body[:m_eq, :k] = p.a_eq
    body[:m_eq, -1] = p.b_eq
    body[m_eq:, :k] = p.a_ub
    body[m_eq:, k:k + m_ub] = np.eye(m_ub)
    body[m_eq:, -1] = p.b_ub
    neg = body[:, -1] < 0
    body[neg] *= -1.0

    basis = [-1] * m
    for i in np.flatnonzero(~neg[m_eq:]):
        basis[m_eq + i] = k + i
    if m_eq:
        nz = body[:, :k] != 0
        lone = np.flatnonzero(nz.sum(axis=0) == 1)
        for j in lone:
            i = int(np.flatnonzero(nz[:, j])[0])
            if i < m_eq and basis[i] < 0 and body[i, j] > 0:
                basis[i] = int(j)
    relax = np.array([b >= 0 for b in basis])
    art_rows = np.flatnonzero(~relax)
    n_cols = k + m_ub + art_rows.size
    # Columns: structural k | slacks m_ub | artificials | rhs.
    a0 = np.zeros((m, n_cols + 1))
    a0[:, :k + m_ub] = body[:, :-1]
    a0[:, -1] = body[:, -1]
    for a, i in enumerate(art_rows):
        a0[i, k + m_ub + a] = 1.0
        basis[i] = k + m_ub + a
    a0p = a0.copy()
    rows = np.flatnonzero(relax)
    a0p[rows, -1] += 1e-7 * (1.0 + np.abs(a0[rows, -1])) * (1.0 + np.random.default_rng(0).random(rows.size))

    t = np.zeros((m + 1, n_cols + 1))
    iters = 0
    if art_rows.size:
        phase1 = np.zeros(n_cols)
        phase1[k + m_ub:] = 1.0
        _refactor(t, a0p, phase1, basis)
        iters = _run_simplex(t, basis, np.ones(n_cols, dtype=bool), a0p, phase1, max_iter, 0)
        if -t[m, -1] > 1e-8 * max(1.0, np.abs(t[:m, -1]).max(initial=0.0)):
            raise Infeasible(f"phase one ended with infeasibility {-t[m, -1]:.3e}")
        # Drive remaining artificials out of the basis. A row with no structural
        # entry left is redundant; its artificial stays basic at zero and, being
        # barred from re-entry, never moves.
        for r in range(m):
            if basis[r] >= k + m_ub:
                nz = np.flatnonzero(np.abs(t[r, :k + m_ub]) > 1e-7)
                if nz.size:
                    c = int(nz[np.argmax(np.abs(t[r, nz]))])
                    _pivot(t, r, c)
                    basis[r] = c

    allowed = np.zeros(n_cols, dtype=bool)
    allowed[:k + m_ub] = True
    phase2 = np.zeros(n_cols)
    phase2[:k] = p.c
    _refactor(t, a0p, phase2, basis)
    iters = _run_simplex(t, basis, allowed, a0p, phase2, max_iter, iters)
    _refactor(t, a0, phase2, basis)
    iters = _dual_simplex(t, basis, allowed, max_iter, iters)
    iters = _run_simplex(t, basis, allowed, a0, phase2, max_iter, iters)

    x_full = np.zeros(n_cols)
    for r, b in enumerate(basis):
        x_full[b] = t[r, -1]
    x = np.maximum(x_full[:k], 0.0)
    value = float(p.c @ x)
    # Duals of the sign-normalized rows are c_B B^-1; flipped rows flip back.
    y = np.linalg.solve(a0[:, basis].T, phase2[basis])
    duals = np.where(neg, -y, y)
    return LpSolution(value, x, duals, iters)


def dual_gap(p: LpProblem, sol: LpSolution) -> tuple[float, float]:
    """(worst dual infeasibility, |primal - dual objective|) for a returned solution.

    Dual of min c.x, A_eq x = b_eq, A_ub x <= b_ub, x >= 0 is
    max b.y subject to A^T y <= c and y_ub <= 0.
    """
    a = np.vstack([p.a_eq, p.a_ub])
    b = np.concatenate([p.b_eq, p.b_ub])
    y = sol.duals
    infeas = float(max(0.0, (a.T @ y - p.c).max(initial=0.0)))
    if p.b_ub.size:
        infeas = max(infeas, float(y[p.b_eq.size:].max(initial=0.0)))
    return infeas, abs(float(b @ y) - sol.value)


def residual(p: LpProblem, x: np.ndarray) -> float:
    """Largest constraint violation of ``x`` (equalities, inequalities, nonnegativity)."""
    worst = float(max(0.0, -x.min(initial=0.0)))
    if p.b_eq.size:
        worst = max(worst, float(np.abs(p.a_eq @ x - p.b_eq).max()))
    if p.b_ub.size:
        worst = max(worst, float((p.a_ub @ x - p.b_ub).max(initial=0.0)))
    return worst

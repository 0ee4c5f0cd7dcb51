"""Small dense linear programs ``max c.b  s.t.  A b <= y`` with free ``b``.

The local-polynomial fits produce LPs with at most five unknowns but up to
thousands of constraints.  :func:`solve_lp` therefore runs a revised
simplex on the dual standard form

    min y.lam   s.t.   A^T lam = c,  lam >= 0,

whose basis is only ``(d+1) x (d+1)``.  The simplex multipliers of an
optimal dual basis are the primal optimum ``b``.  Pivoting follows Bland's
rule (lowest index enters, lowest index leaves among ratio ties), so the
result is a deterministic function of the input.

When the optimal face has positive dimension the solution is flagged
``Degenerate-Tie`` and the vertex with the lexicographically smallest
sorted basis (tuple of constraint indices) is returned.
:func:`enumerate_vertices` applies the same rule by brute force and serves
as the test oracle.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, LPError, OracleTooLargeError

PIVOT_TOL = 1e-11
FEAS_TOL = 1e-9
OPT_TOL = 1e-12
# A face whose bounding box is wider than this in any coordinate is a tie.
FACE_WIDTH_TOL = 1e-7

ORACLE_MAX_ROWS = 20
ORACLE_MAX_DEGREE = 4


class LpStatus(str, enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"
    DEGENERATE_TIE = "Degenerate-Tie"

    def __str__(self):
        return self.value

    @property
    def solved(self) -> bool:
        return self in (LpStatus.OPTIMAL, LpStatus.DEGENERATE_TIE)


@dataclass(frozen=True)
class LinearProgram:
    objective: np.ndarray
    constraint_matrix: np.ndarray
    constraint_rhs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.objective, dtype=float).reshape(-1)
        A = np.asarray(self.constraint_matrix, dtype=float)
        y = np.asarray(self.constraint_rhs, dtype=float).reshape(-1)
        if A.ndim != 2 or A.shape != (y.size, c.size):
            raise DomainError(f"inconsistent LP shapes: A {A.shape}, y {y.shape}, c {c.shape}")
        if A.shape[0] < A.shape[1]:
            raise DomainError("an LP needs at least d+1 constraints")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(y)) and np.all(np.isfinite(c))):
            raise DomainError("LP data must be finite")
        object.__setattr__(self, "objective", c)
        object.__setattr__(self, "constraint_matrix", A)
        object.__setattr__(self, "constraint_rhs", y)

    @property
    def n_rows(self) -> int:
        return self.constraint_matrix.shape[0]

    @property
    def degree(self) -> int:
        return self.constraint_matrix.shape[1] - 1


@dataclass(frozen=True)
class LpSolution:
    coefficients: np.ndarray
    objective_value: float
    active_set: tuple
    status: LpStatus
    basis: tuple = ()


def _empty_solution(m, status):
    return LpSolution(np.full(m, np.nan), np.nan, (), status, ())


def _revised_simplex(M, rhs, cost):
    """Minimise ``cost.lam`` s.t. ``M lam = rhs``, ``lam >= 0``.

    Returns ``(status, basis, multipliers)`` with status one of
    ``'optimal'``, ``'infeasible'``, ``'unbounded'``.  Basis entries ``>= n``
    are artificial columns left in place on redundant rows.
    """
    m, n = M.shape
    sign = np.where(rhs < 0, -1.0, 1.0)
    W = np.hstack([M * sign[:, None], np.eye(m)])
    b = rhs * sign
    basis = list(range(n, n + m))
    scale = 1.0 + np.max(np.abs(b))

    max_iter = 50 * (n + m)

    def iterate(costs, opt_tol, polish=False):
        for _ in range(n + m if polish else max_iter):
            Bm = W[:, basis]
            xB = np.linalg.solve(Bm, b)
            pi = np.linalg.solve(Bm.T, costs[basis])
            red = costs[:n] - pi @ W[:, :n]
            red[[j for j in basis if j < n]] = 0.0
            cand = np.flatnonzero(red < -opt_tol)
            if cand.size == 0:
                return "optimal", xB, pi
            j = int(cand[np.argmin(red[cand])]) if polish else int(cand[0])
            col = np.linalg.solve(Bm, W[:, j])
            pos = np.flatnonzero(col > PIVOT_TOL)
            if pos.size == 0:
                return "unbounded", xB, pi
            ratios = np.maximum(xB[pos], 0.0) / col[pos]
            rmin = ratios.min()
            ties = pos[ratios <= rmin + 1e-12 * (1.0 + rmin)]
            leave = min(ties, key=lambda i: basis[i])
            basis[leave] = j
        if polish:
            return "optimal", xB, pi
        raise LPError(f"simplex did not terminate within {max_iter} pivots")

    # Phase I: minimise the sum of artificials.
    phase1 = np.concatenate([np.zeros(n), np.ones(m)])
    _, xB, _ = iterate(phase1, 1e-12)
    if sum(xB[i] for i, j in enumerate(basis) if j >= n) > FEAS_TOL * scale:
        return "infeasible", basis, None
    # Drive zero-level artificials out of the basis where possible.
    for r in range(m):
        if basis[r] < n:
            continue
        Binv_row = np.linalg.solve(W[:, basis].T, np.eye(m)[r])
        row = Binv_row @ W[:, :n]
        for j in range(n):
            if j not in basis and abs(row[j]) > FEAS_TOL:
                basis[r] = j
                break
    phase2 = np.concatenate([np.asarray(cost, dtype=float), np.zeros(m)])
    cost_scale = 1.0 + np.max(np.abs(cost)) if len(cost) else 1.0
    status, _, pi = iterate(phase2, OPT_TOL * cost_scale)
    if status == "optimal":
        # Remove violations hidden below the tolerance, so that for example a
        # one-column problem returns the exact minimum of the data.
        saved = list(basis)
        status, _, pi_exact = iterate(phase2, 0.0, polish=True)
        if status == "optimal":
            pi = pi_exact
        else:
            basis[:] = saved
            status = "optimal"
    return status, basis, pi * sign


def _solve_plain(c, A, y):
    """Simplex optimum without tie processing: ``(status, b, basis)``."""
    m = A.shape[1]
    status, basis, pi = _revised_simplex(A.T, c, y)
    if status == "unbounded":
        return LpStatus.INFEASIBLE, None, None
    if status == "infeasible":
        # The dual is infeasible: primal is unbounded if it is feasible at all.
        feas, _, _ = _revised_simplex(A.T, np.zeros(m), y)
        return (LpStatus.INFEASIBLE if feas == "unbounded" else LpStatus.UNBOUNDED), None, None
    return LpStatus.OPTIMAL, pi, basis


def _face_box(c, A, y, opt):
    """Bounding box of the optimal face; ``None`` if it is unbounded."""
    m = A.shape[1]
    slack = 1e-10 * (1.0 + abs(opt))
    A_face = np.vstack([A, -c[None, :]])
    y_face = np.concatenate([y, [-opt + slack]])
    lo, hi = np.empty(m), np.empty(m)
    for i in range(m):
        for sgn, store in ((1.0, hi), (-1.0, lo)):
            e = np.zeros(m)
            e[i] = sgn
            st, b, _ = _solve_plain(e, A_face, y_face)
            if st is not LpStatus.OPTIMAL:
                return None
            store[i] = b[i]
    return lo, hi, A_face, y_face


def _lexicographic_vertex(c, A, y, opt, box):
    """First sorted basis (lexicographic) whose vertex is feasible and optimal."""
    m = A.shape[1]
    n = A.shape[0]
    if box is not None:
        lo, hi, A_face, y_face = box
        reach = np.maximum(A * lo, A * hi).sum(axis=1)
        maybe = np.flatnonzero(y - reach <= FEAS_TOL * (1.0 + np.abs(y)))
    else:
        A_face = np.vstack([A, -c[None, :]])
        y_face = np.concatenate([y, [-opt + 1e-10 * (1.0 + abs(opt))]])
        maybe = np.arange(n)
    cands = []
    for j in maybe:
        st, b, _ = _solve_plain(A[j], A_face, y_face)
        if st is LpStatus.UNBOUNDED or (st is LpStatus.OPTIMAL and A[j] @ b >= y[j] - FEAS_TOL * (1 + abs(y[j]))):
            cands.append(int(j))
    opt_tol = FEAS_TOL * (1.0 + abs(opt))
    for S in itertools.combinations(cands, m):
        AS = A[list(S)]
        if np.linalg.matrix_rank(AS) < m:
            continue
        b = np.linalg.solve(AS, y[list(S)])
        if np.all(A @ b <= y + FEAS_TOL) and c @ b >= opt - opt_tol:
            return b, S
    return None, None


def solve_lp(lp: LinearProgram) -> LpSolution:
    """Vertex-optimal solution of ``max c.b s.t. A b <= y``."""
    c, A, y = lp.objective, lp.constraint_matrix, lp.constraint_rhs
    m = A.shape[1]
    status, b, basis = _solve_plain(c, A, y)
    if status is not LpStatus.OPTIMAL:
        return _empty_solution(m, status)
    n = A.shape[0]
    opt = float(c @ b)
    # Uniqueness is certain when the dual basis is all-real and strictly positive.
    real = all(j < n for j in basis)
    lam = np.linalg.solve(A[basis].T, c) if real else None
    tie = False
    if not real or np.any(lam <= 1e-10 * (1.0 + np.max(np.abs(c)))):
        box = _face_box(c, A, y, opt)
        tie = box is None or bool(np.any(box[1] - box[0] > FACE_WIDTH_TOL))
        if tie:
            b_lex, S = _lexicographic_vertex(c, A, y, opt, box)
            if b_lex is not None:
                b, basis = b_lex, list(S)
            opt = float(c @ b)
    active = tuple(int(i) for i in np.flatnonzero(y - A @ b <= FEAS_TOL))
    return LpSolution(
        coefficients=np.array(b, dtype=float),
        objective_value=opt,
        active_set=active,
        status=LpStatus.DEGENERATE_TIE if tie else LpStatus.OPTIMAL,
        basis=tuple(sorted(int(j) for j in basis)),
    )


def _null_direction(AS, m):
    if AS.shape[0] == 0:
        return np.ones(1) if m == 1 else None
    _, s, vt = np.linalg.svd(AS)
    if np.sum(s > 1e-10 * max(1.0, s[0])) < m - 1:
        return None
    return vt[-1]


def enumerate_vertices(lp: LinearProgram) -> LpSolution:
    """Brute-force oracle: solve every ``(d+1)``-subset system.

    Only for ``n <= 20`` rows and degree ``d <= 4``.  Assumes ``A`` has full
    column rank (otherwise the polyhedron has no vertices).
    """
    c, A, y = lp.objective, lp.constraint_matrix, lp.constraint_rhs
    n, m = A.shape
    if n > ORACLE_MAX_ROWS or m - 1 > ORACLE_MAX_DEGREE:
        raise OracleTooLargeError(f"oracle limited to n <= {ORACLE_MAX_ROWS}, d <= {ORACLE_MAX_DEGREE}")
    if np.linalg.matrix_rank(A) < m:
        raise DomainError("vertex enumeration needs a full-column-rank constraint matrix")
    verts = []
    for S in itertools.combinations(range(n), m):
        AS = A[list(S)]
        if np.linalg.matrix_rank(AS) < m:
            continue
        b = np.linalg.solve(AS, y[list(S)])
        if np.all(A @ b <= y + FEAS_TOL):
            verts.append((S, b, float(c @ b)))
    if not verts:
        return _empty_solution(m, LpStatus.INFEASIBLE)
    best = max(v[2] for v in verts)
    opt_tol = FEAS_TOL * (1.0 + abs(best))
    flat_ray = False
    for S in itertools.combinations(range(n), m - 1):
        z = _null_direction(A[list(S)], m)
        if z is None:
            continue
        for sgn in (1.0, -1.0):
            zz = sgn * z
            if np.all(A @ zz <= 1e-12 * (1.0 + np.abs(A).max())):
                if c @ zz > opt_tol:
                    return _empty_solution(m, LpStatus.UNBOUNDED)
                if abs(c @ zz) <= opt_tol:
                    flat_ray = True
    optimal = [v for v in verts if v[2] >= best - opt_tol]
    S, b, _ = optimal[0]
    distinct = any(np.max(np.abs(v[1] - b)) > FEAS_TOL for v in optimal[1:])
    active = tuple(int(i) for i in np.flatnonzero(y - A @ b <= FEAS_TOL))
    return LpSolution(
        coefficients=b,
        objective_value=float(c @ b),
        active_set=active,
        status=LpStatus.DEGENERATE_TIE if (distinct or flat_ray) else LpStatus.OPTIMAL,
        basis=tuple(S),
    )

"""Two-phase revised simplex solver and the maximin programs built on it.

The basis matrix is refactored from the original data at every pivot, so
round-off cannot build up over long pivot sequences. Pricing is Dantzig's
largest reduced cost; after a run of degenerate pivots it switches to
Bland's smallest-index rule, which cannot cycle.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

FEAS_TOL = 1e-9
PIVOT_TOL = 1e-9
OPT_TOL = 1e-11
MAX_PIVOTS = 100_000
DEGENERATE_RUN = 30

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


class LPError(ValueError):
    """Malformed linear program."""


@dataclass
class LinearProgram:
    """maximize ``objective @ x`` subject to the listed rows.

    ``eq_constraints`` and ``ineq_constraints`` are sequences of ``(a, b)``
    meaning ``a @ x == b`` and ``a @ x <= b``. ``bounds`` holds one lower
    bound per variable, ``None`` marking a free variable; the default is
    x >= 0.
    """

    objective: Sequence[float]
    eq_constraints: Sequence[tuple[Sequence[float], float]] = ()
    ineq_constraints: Sequence[tuple[Sequence[float], float]] = ()
    bounds: Optional[Sequence[Optional[float]]] = None


@dataclass
class LPSolution:
    status: str
    x: Optional[np.ndarray] = None
    value: Optional[float] = None
    pivots: int = field(default=0, repr=False)

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


def _rows(pairs, n: int, kind: str) -> tuple[np.ndarray, np.ndarray]:
    A = np.zeros((len(pairs), n))
    b = np.zeros(len(pairs))
    for r, (a, rhs) in enumerate(pairs):
        a = np.asarray(a, dtype=float).ravel()
        if a.size != n:
            raise LPError(f"{kind} row {r} has {a.size} coefficients, expected {n}")
        A[r] = a
        b[r] = float(rhs)
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
        raise LPError(f"non-finite {kind} coefficients")
    return A, b


def _simplex(A: np.ndarray, b: np.ndarray, basis: list[int], cost: np.ndarray,
             allowed: np.ndarray) -> tuple[str, int]:
    """Maximize ``cost @ z`` s.t. ``A z = b``, z >= 0 from a feasible basis (in place)."""
    bland = False
    degenerate = 0
    for it in range(MAX_PIVOTS):
        B = A[:, basis]
        xb = np.linalg.solve(B, b)
        y = np.linalg.solve(B.T, cost[basis])
        reduced = cost - A.T @ y
        reduced[basis] = 0.0
        cand = np.flatnonzero((reduced > OPT_TOL) & allowed)
        if cand.size == 0:
            return OPTIMAL, it
        e = int(cand[0]) if bland else int(cand[np.argmax(reduced[cand])])
        d = np.linalg.solve(B, A[:, e])
        rows = np.flatnonzero(d > PIVOT_TOL)
        if rows.size == 0:
            return UNBOUNDED, it
        ratios = np.maximum(xb[rows], 0.0) / d[rows]
        best = ratios.min()
        ties = rows[ratios <= best + FEAS_TOL * 1e-3]
        if bland:
            r = int(min(ties, key=lambda k: basis[k]))
        else:
            r = int(ties[np.argmax(d[ties])])
        if best <= FEAS_TOL * 1e-3:
            degenerate += 1
            if degenerate >= DEGENERATE_RUN:
                bland = True
        else:
            degenerate = 0
            bland = False
        basis[r] = e
    raise RuntimeError("simplex pivot limit reached")


def solve_lp(lp: LinearProgram) -> LPSolution:
    """Solve ``lp`` to floating-point accuracy with a two-phase simplex."""
    c = np.asarray(lp.objective, dtype=float).ravel()
    n = c.size
    if n == 0:
        raise LPError("program has no variables")
    if not np.all(np.isfinite(c)):
        raise LPError("non-finite objective")
    A_eq, b_eq = _rows(lp.eq_constraints, n, "equality")
    A_ub, b_ub = _rows(lp.ineq_constraints, n, "inequality")
    bounds = [0.0] * n if lp.bounds is None else list(lp.bounds)
    if len(bounds) != n:
        raise LPError(f"{len(bounds)} bounds for {n} variables")

    # x = S @ y + shift with y >= 0; free variables split into y+ - y-
    cols = []
    shift = np.zeros(n)
    for j, lo in enumerate(bounds):
        if lo is None:
            cols += [(j, 1.0), (j, -1.0)]
        else:
            if not np.isfinite(lo):
                raise LPError(f"lower bound of x{j} must be finite or None")
            shift[j] = lo
            cols.append((j, 1.0))
    S = np.zeros((n, len(cols)))
    for k, (j, sign) in enumerate(cols):
        S[j, k] = sign

    # standard form [A_ub S, I; A_eq S, 0] z = b, then artificials where needed
    mu, me, ny = len(b_ub), len(b_eq), S.shape[1]
    m = mu + me
    A = np.zeros((m, ny + mu))
    A[:mu, :ny] = A_ub @ S
    A[:mu, ny:] = np.eye(mu)
    A[mu:, :ny] = A_eq @ S
    b = np.concatenate([b_ub - A_ub @ shift, b_eq - A_eq @ shift])
    flip = b < 0
    A[flip] *= -1.0
    b[flip] *= -1.0

    basis = [ny + r if r < mu and not flip[r] else -1 for r in range(m)]
    need = [r for r in range(m) if basis[r] < 0]
    art = np.zeros((m, len(need)))
    for a, r in enumerate(need):
        art[r, a] = 1.0
        basis[r] = ny + mu + a
    A = np.hstack([A, art])
    ncol = A.shape[1]
    real = np.zeros(ncol, dtype=bool)
    real[: ny + mu] = True
    pivots = 0

    if need:
        cost1 = np.where(real, 0.0, -1.0)
        _, k = _simplex(A, b, basis, cost1, np.ones(ncol, dtype=bool))
        pivots += k
        xb = np.linalg.solve(A[:, basis], b)
        infeas = sum(v for v, j in zip(xb, basis) if not real[j])
        if infeas > FEAS_TOL * max(1.0, np.abs(b).max()):
            return LPSolution(INFEASIBLE, pivots=pivots)
        # swap zero-level artificials out of the basis; drop redundant rows
        r = 0
        while r < len(basis):
            if real[basis[r]]:
                r += 1
                continue
            Binv_row = np.linalg.solve(A[:, basis].T, np.eye(len(basis))[r])
            alpha = Binv_row @ A
            alpha[~real] = 0.0
            alpha[basis] = 0.0
            j = int(np.argmax(np.abs(alpha)))
            if abs(alpha[j]) > PIVOT_TOL:
                basis[r] = j
                r += 1
            else:
                keep = np.ones(len(basis), dtype=bool)
                keep[r] = False
                A, b = A[keep], b[keep]
                del basis[r]

    if not basis:
        # every row was redundant: the constraints are void
        z = np.zeros(ncol)
    else:
        cost2 = np.zeros(ncol)
        cost2[:ny] = S.T @ c
        status, k = _simplex(A, b, basis, cost2, real)
        pivots += k
        if status == UNBOUNDED:
            return LPSolution(UNBOUNDED, pivots=pivots)
        z = np.zeros(ncol)
        z[basis] = np.linalg.solve(A[:, basis], b)
    if not basis and np.any(S.T @ c > OPT_TOL):
        return LPSolution(UNBOUNDED, pivots=pivots)
    y_ = np.maximum(z[:ny], 0.0)
    x = S @ y_ + shift
    return LPSolution(OPTIMAL, x, float(c @ x), pivots)


def _as_rows(rate_rows) -> np.ndarray:
    R = np.atleast_2d(np.asarray(rate_rows, dtype=float))
    if R.size == 0 or R.shape[0] == 0:
        raise LPError("need at least one rate row")
    return R


def clean_simplex_point(x) -> np.ndarray:
    """Clip solver round-off and renormalize onto the probability simplex."""
    p = np.asarray(x, dtype=float)
    p = np.where(p < 1e-13, 0.0, p)
    return p / p.sum()


def maximin_lp(rate_rows) -> tuple[np.ndarray, float]:
    """Maximize the smallest of several affine functions over the simplex.

    Epigraph form: maximize t subject to t <= R_i @ p for every row and p a
    probability vector. Returns the optimal p and ``min_i R_i @ p``.
    """
    R = _as_rows(rate_rows)
    K, M = R.shape
    obj = np.zeros(M + 1)
    obj[-1] = 1.0
    ineq = [(np.append(-R[i], 1.0), 0.0) for i in range(K)]
    eq = [(np.append(np.ones(M), 0.0), 1.0)]
    sol = solve_lp(LinearProgram(obj, eq, ineq, bounds=[0.0] * M + [None]))
    if not sol.optimal:
        raise RuntimeError(f"maximin program reported {sol.status}")
    p = clean_simplex_point(sol.x[:M])
    return p, float((R @ p).min())


def equality_constrained_max(rate_rows, eq_set) -> LPSolution:
    """Maximize R_b over the simplex while all rows in ``eq_set`` agree.

    ``eq_set`` holds 1-based row indices and b is its smallest member.
    """
    R = _as_rows(rate_rows)
    K, M = R.shape
    B = sorted(set(eq_set))
    if not B or B[0] < 1 or B[-1] > K:
        raise LPError(f"equality set {eq_set!r} must be a nonempty subset of 1..{K}")
    first = R[B[0] - 1]
    eq = [(np.ones(M), 1.0)] + [(first - R[j - 1], 0.0) for j in B[1:]]
    sol = solve_lp(LinearProgram(first, eq))
    if sol.optimal:
        sol.x = clean_simplex_point(sol.x)
        sol.value = float(first @ sol.x)
    return sol

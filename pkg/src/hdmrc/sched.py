"""Optimal transmit/listen schedules for decode-forward relaying.

Reception rates are affine in the schedule, so every search step below is a
linear program. Row i of a rate matrix (1-based) is the reception rate of
node i+1; bottleneck sets in reports are given as node indices.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np

from . import rates
from .linprog import (
    LinearProgram,
    clean_simplex_point,
    equality_constrained_max,
    maximin_lp,
    solve_lp,
)
from .model import GainMatrix, PreconditionError, Topology, build_gain_matrix, enumerate_states

STRICT_MARGIN = 1e-9
MAX_GRID_POINTS = 10**8
MAX_ORDER_RELAYS = 8


@dataclass
class SolveReport:
    schedule: np.ndarray
    df_rate: float
    bottleneck: tuple[int, ...]
    reception_rates: dict[int, float]
    method: str
    cutset_bound: Optional[float] = None
    gap: Optional[float] = None
    notes: tuple[str, ...] = field(default=())

    @property
    def D(self) -> int:
        return len(self.reception_rates) + 1

    @property
    def bottleneck_indices(self) -> tuple[int, ...]:
        """Bottleneck as rate-row indices (node i <-> index i-1)."""
        return tuple(i - 1 for i in self.bottleneck)

    def support(self, tol: float = 1e-9) -> tuple[int, ...]:
        return tuple(int(j) for j in np.flatnonzero(self.schedule > tol))


@dataclass
class Candidate:
    """Outcome of one bottleneck-set test inside algorithms 1 and 2."""

    bottleneck: tuple[int, ...]  # 1-based row indices
    value: Optional[float]
    schedule: Optional[np.ndarray]
    slack: Optional[float]

    @property
    def accepted(self) -> bool:
        return self.schedule is not None and (self.slack is None or self.slack > STRICT_MARGIN)


def _test_bottleneck(R: np.ndarray, B) -> Candidate:
    """Maximize the rows in ``B`` jointly, then look for strict slack elsewhere.

    The first program finds the best common value v of the rows in B. The
    second searches the optimal face for the point where every other row
    exceeds v by the largest margin.
    """
    K, M = R.shape
    B = tuple(sorted(B))
    sol = equality_constrained_max(R, B)
    if not sol.optimal:
        return Candidate(B, None, None, None)
    v = sol.value
    others = [j for j in range(1, K + 1) if j not in B]
    if not others:
        return Candidate(B, v, sol.x, None)
    first = R[B[0] - 1]
    obj = np.zeros(M + 1)
    obj[-1] = 1.0
    eq = [(np.append(np.ones(M), 0.0), 1.0), (np.append(first, 0.0), v)]
    eq += [(np.append(first - R[j - 1], 0.0), 0.0) for j in B[1:]]
    ineq = [(np.append(first - R[j - 1], 1.0), 0.0) for j in others]
    face = solve_lp(LinearProgram(obj, eq, ineq, bounds=[0.0] * M + [None]))
    if not face.optimal:
        # the optimal face is nonempty; fall back to the first program's point
        p = sol.x
        slack = float(min(R[j - 1] @ p for j in others) - first @ p)
    else:
        p = clean_simplex_point(face.x[:M])
        slack = float(face.x[-1])
    return Candidate(B, float(first @ p), p, slack)


def algorithm2_candidates(rate_rows, early_stop: bool = True) -> list[Candidate]:
    """Test the prefix bottleneck sets {1}, {1,2}, ... in order."""
    R = np.atleast_2d(np.asarray(rate_rows, dtype=float))
    out = []
    for B in range(1, R.shape[0] + 1):
        cand = _test_bottleneck(R, range(1, B + 1))
        out.append(cand)
        if early_stop and cand.accepted:
            break
    return out


def _finish(R, p, B_rows, method, topo=None, g=None, notes=(), bound=True) -> SolveReport:
    r = R @ p
    reception = {i + 2: float(v) for i, v in enumerate(r)}
    bottleneck = tuple(b + 1 for b in B_rows)
    report = SolveReport(p, float(r.min()), bottleneck, reception, method, notes=tuple(notes))
    if bound and topo is not None:
        _, ub = cutset_bound_opt(topo, g)
        report.cutset_bound = ub
        report.gap = ub - report.df_rate
    return report


def solve_algorithm1(rate_rows, topo: Optional[Topology] = None, g: Optional[GainMatrix] = None,
                     bound: bool = True) -> SolveReport:
    """General maximin search over every nonempty bottleneck set.

    Only affine rate rows are supported, which lets each local-maximum
    search be replaced by a global linear program.
    """
    R = np.atleast_2d(np.asarray(rate_rows, dtype=float))
    K = R.shape[0]
    best: Optional[Candidate] = None
    for size in range(1, K + 1):
        for B in itertools.combinations(range(1, K + 1), size):
            cand = _test_bottleneck(R, B)
            if cand.accepted and (best is None or cand.value > best.value):
                best = cand
    if best is None:
        raise RuntimeError("no bottleneck set produced a valid candidate")
    return _finish(R, best.schedule, best.bottleneck, "algorithm1", topo, g, bound=bound)


def solve_algorithm2(topo: Topology, g: GainMatrix, bound: bool = True) -> SolveReport:
    """Optimal schedule via prefix bottleneck sets with early termination."""
    R = rates.reception_rows(g, topo)
    cands = algorithm2_candidates(R)
    last = cands[-1]
    if not last.accepted:
        raise RuntimeError("algorithm 2 found no bottleneck set; inputs outside the model")
    return _finish(R, last.schedule, last.bottleneck, "algorithm2", topo, g, bound=bound)


class NotDegradedError(PreconditionError):
    def __init__(self, triple):
        self.triple = triple
        i, j, k = triple
        super().__init__(
            f"network is not rSNR-degraded: SNR({i}->{j}) <= SNR({i}->{k}) for triple {triple}; "
            "use algorithm 2"
        )


def solve_algorithm3(topo: Topology, g: GainMatrix, bound: bool = True) -> SolveReport:
    """Single equal-rates maximization, valid for rSNR-degraded networks only."""
    ok, triple = rates.is_rsnr_degraded(g, topo)
    if not ok:
        raise NotDegradedError(triple)
    R = rates.reception_rows(g, topo)
    K = R.shape[0]
    sol = equality_constrained_max(R, range(1, K + 1))
    if not sol.optimal:
        raise RuntimeError(f"equal-rate program reported {sol.status}")
    return _finish(R, sol.x, tuple(range(1, K + 1)), "algorithm3", topo, g, bound=bound)


def solve_lp_oracle(topo: Topology, g: GainMatrix, bound: bool = True) -> SolveReport:
    """Direct epigraph LP; the bottleneck is read off the achieved rates."""
    R = rates.reception_rows(g, topo)
    p, _ = maximin_lp(R)
    reception = {i + 2: float(v) for i, v in enumerate(R @ p)}
    _, nodes = rates.argmin_nodes(reception)
    return _finish(R, p, tuple(n - 1 for n in nodes), "lp_oracle", topo, g, bound=bound)


def cutset_bound_opt(topo: Topology, g: GainMatrix) -> tuple[np.ndarray, float]:
    """Schedule maximizing the smallest cut rate, and that rate."""
    return maximin_lp(rates.cut_rows(g, topo))


@lru_cache(maxsize=8)
def _lattice(M: int, n: int) -> np.ndarray:
    """All points of the simplex in R^M with coordinates in multiples of 1/n."""
    if M == 1:
        return np.ones((1, 1))
    bars = np.array(list(itertools.combinations(range(n + M - 1), M - 1)), dtype=np.int64)
    edges = np.hstack([np.full((len(bars), 1), -1), bars, np.full((len(bars), 1), n + M - 1)])
    counts = np.diff(edges, axis=1) - 1
    return counts / n


def grid_oracle(rate_rows, step: float) -> tuple[np.ndarray, float]:
    """Exhaustive maximin over the simplex lattice of spacing ``step``."""
    R = np.atleast_2d(np.asarray(rate_rows, dtype=float))
    M = R.shape[1]
    n = round(1.0 / step)
    if n < 1 or abs(n * step - 1.0) > 1e-9:
        raise ValueError(f"step must be 1/n for a positive integer n, got {step}")
    if math.comb(n + M - 1, M - 1) > MAX_GRID_POINTS:
        raise ValueError(f"lattice with step {step} over {M} states exceeds {MAX_GRID_POINTS} points")
    pts = _lattice(M, n)
    best_val, best_p = -np.inf, None
    for start in range(0, len(pts), 1 << 20):
        chunk = pts[start : start + (1 << 20)]
        vals = (chunk @ R.T).min(axis=1)
        k = int(np.argmax(vals))
        if vals[k] > best_val:
            best_val, best_p = float(vals[k]), chunk[k].copy()
    return best_p, best_val


def grid_lipschitz(rate_rows) -> float:
    """Max-norm Lipschitz constant of min_i R_i along the simplex.

    For a move e with sum(e) == 0 and |e_j| <= h, |R_i @ e| is at most
    spread_i * floor(M/2) * h, spread_i being the coefficient range of row i.
    """
    R = np.atleast_2d(np.asarray(rate_rows, dtype=float))
    spread = (R.max(axis=1) - R.min(axis=1)).max()
    return float(spread * (R.shape[1] // 2))


def solve_grid(topo: Topology, g: GainMatrix, step: float = 0.01, bound: bool = True) -> SolveReport:
    R = rates.reception_rows(g, topo)
    p, _ = grid_oracle(R, step)
    reception = {i + 2: float(v) for i, v in enumerate(R @ p)}
    _, nodes = rates.argmin_nodes(reception)
    return _finish(R, p, tuple(n - 1 for n in nodes), "grid_oracle", topo, g, bound=bound)


def _interval(constraints) -> Optional[tuple[float, float]]:
    """Values of x in [0, 1] with c*x + d > 0 for every (c, d); None if empty."""
    lo, hi = 0.0, 1.0
    lo_open = hi_open = False
    for c, d in constraints:
        if c > 0:
            t = -d / c
            if t >= lo:
                lo, lo_open = t, True
        elif c < 0:
            t = -d / c
            if t <= hi:
                hi, hi_open = t, True
        elif d <= 0:
            return None
    if lo < hi or (lo == hi and not (lo_open or hi_open)):
        return lo, hi
    return None


def four_node_closed_form(topo: Topology, g: GainMatrix, bound: bool = True) -> SolveReport:
    """Optimal schedule of the two-relay network from explicit case formulas.

    States are ordered (L,L), (L,T), (T,L), (T,T). Bottleneck sets {2},
    {2,3} and {2,3,4} are tried in turn; degenerate ties that the formulas
    cannot resolve fall back to algorithm 2 with a note.
    """
    if topo.D != 4:
        raise PreconditionError(f"closed form needs a 4-node network, got D={topo.D}")
    s = g.snr(topo)
    G = rates.gamma
    g12 = float(G(s[0, 1]))
    g13 = float(G(s[0, 2]))
    g14 = float(G(s[0, 3]))
    g3 = float(G(s[0, 2] + s[1, 2]))  # node 3 hears nodes 1 and 2
    g134 = float(G(s[0, 3] + s[2, 3]))
    g124 = float(G(s[0, 3] + s[1, 3]))
    g1234 = float(G(s[0, 3] + s[1, 3] + s[2, 3]))
    R = rates.reception_rows(g, topo)
    m = STRICT_MARGIN

    # |B| = 1: p = (p0, 1-p0, 0, 0), r2 = g12, need r3 > r2 and r4 > r2
    iv = _interval([(g13, -g12 - m), (g14 - g134, g134 - g12 - m)])
    if iv is not None:
        p0 = 0.5 * (iv[0] + iv[1])
        p = np.array([p0, 1.0 - p0, 0.0, 0.0])
        return _finish(R, p, (1,), "closed_form_4node", topo, g, bound=bound)

    # |B| = 2: p = (p0, 0, p2, 0) with r2 = r3
    if abs(g12 - g13) <= 1e-12:
        rep = solve_algorithm2(topo, g, bound=bound)
        rep.notes = ("equal source SNR at both relays; fell back to algorithm 2",)
        return rep
    den = g3 + g12 - g13
    if den > 0:
        p0 = g3 / den
        p2 = (g12 - g13) / den
        if 0 < p0 < 1 and g3 * (g12 - g14) + m * den < g124 * (g12 - g13):
            p = np.array([p0, 0.0, p2, 0.0])
            return _finish(R, p, (1, 2), "closed_form_4node", topo, g, bound=bound)

    # |B| = 3: r2 = r3 = r4 leaves a 1-D program in p0
    rows = np.array([
        [g12 - g13, g12, -g3, 0.0],
        [g12 - g14, g12 - g134, -g124, -g1234],
        [1.0, 1.0, 1.0, 1.0],
    ])
    A, col0 = rows[:, 1:], rows[:, 0]
    if abs(np.linalg.det(A)) < 1e-12:
        rep = solve_algorithm2(topo, g, bound=bound)
        rep.notes = ("singular equal-rate system; fell back to algorithm 2",)
        return rep
    u = np.linalg.solve(A, np.array([0.0, 0.0, 1.0]))
    w = np.linalg.solve(A, -col0)
    # p_k = u_k + w_k p0 must lie in [0, 1]
    lo, hi = 0.0, 1.0
    for uk, wk in zip(u, w):
        for bound_val, sign in ((0.0, 1.0), (1.0, -1.0)):
            # sign * (uk + wk p0 - bound_val) >= 0
            c, d = sign * wk, sign * (uk - bound_val)
            if abs(c) < 1e-15:
                if d < -1e-12:
                    lo, hi = 1.0, 0.0
            elif c > 0:
                lo = max(lo, -d / c)
            else:
                hi = min(hi, -d / c)
    if lo > hi + 1e-12:
        rep = solve_algorithm2(topo, g, bound=bound)
        rep.notes = ("no feasible equal-rate schedule in closed form; fell back to algorithm 2",)
        return rep
    slope = g12 * (1.0 + w[0])
    p0 = hi if slope > 0 else lo
    p = clean_simplex_point(np.concatenate([[p0], u + w * p0]))
    return _finish(R, p, (1, 2, 3), "closed_form_4node", topo, g, bound=bound)


def best_decoding_order(topo: Topology, g: Optional[GainMatrix] = None) -> tuple[tuple[int, ...], SolveReport]:
    """Try every relay decoding order and keep the best DF rate.

    The returned permutation lists the original relay indices in their new
    order; the report refers to the relabeled network. Ties keep the
    earliest order, identity first.
    """
    D = topo.D
    if D - 2 > MAX_ORDER_RELAYS:
        raise PreconditionError(f"{D - 2} relays exceed the order-search limit of {MAX_ORDER_RELAYS}")
    best_perm, best_rep, best_topo = None, None, None
    for perm in itertools.permutations(range(2, D)):
        t = topo.relabel(perm)
        rep = solve_algorithm2(t, _gains_for(t, topo, g, perm), bound=False)
        if best_rep is None or rep.df_rate > best_rep.df_rate + 1e-12:
            best_perm, best_rep, best_topo = perm, rep, t
    _, ub = cutset_bound_opt(best_topo, _gains_for(best_topo, topo, g, best_perm))
    best_rep.cutset_bound = ub
    best_rep.gap = ub - best_rep.df_rate
    return tuple(best_perm), best_rep


def _gains_for(t: Topology, orig: Topology, g: Optional[GainMatrix], perm) -> GainMatrix:
    if g is None:
        return build_gain_matrix(t)
    nodes = [1, *perm, orig.D]
    idx = np.array(nodes) - 1
    return GainMatrix(g.values[np.ix_(idx, idx)])


def state_labels(D: int) -> list[str]:
    return [s.label for s in enumerate_states(D)]


SOLVERS = {
    "algo2": solve_algorithm2,
    "algo3": solve_algorithm3,
    "lp": solve_lp_oracle,
    "closed4": four_node_closed_form,
}

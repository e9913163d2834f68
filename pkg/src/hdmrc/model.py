"""Network topologies, path-loss gains, transmit/listen states and schedules.

Node numbering is 1-based at the API boundary: node 1 is the source, node D
the destination and nodes 2..D-1 the relays. Arrays are stored 0-based.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

MAX_NODES = 16
SCHEDULE_TOL = 1e-12


class TopologyError(ValueError):
    """Invalid network description."""


class ScheduleError(ValueError):
    """Schedule is not a probability vector over the transmit/listen states."""


class PreconditionError(ValueError):
    """A solver was asked to handle an instance outside its domain."""


def check_node_count(D: int) -> None:
    """Reject node counts whose state space is too large for exact solvers."""
    if D < 2:
        raise TopologyError(f"need at least 2 nodes, got D={D}")
    if D > MAX_NODES:
        raise TopologyError(
            f"D={D} exceeds the cap of {MAX_NODES} nodes "
            f"({2 ** (MAX_NODES - 2)} transmit/listen states)"
        )


@dataclass(frozen=True)
class Topology:
    """A D-node relay network.

    ``powers[i-1]`` is the transmit power of node i (i = 1..D-1) and
    ``noises[k-2]`` the receiver noise variance of node k (k = 2..D).
    Exactly one of ``positions`` (D points in the plane) and ``gains`` (an
    explicit path-loss matrix, see :func:`build_gain_matrix`) is given.
    """

    powers: tuple[float, ...]
    noises: tuple[float, ...]
    kappa: float = 1.0
    eta: float = 2.0
    positions: Optional[tuple[tuple[float, float], ...]] = None
    gains: Optional[tuple[tuple[float, ...], ...]] = None

    def __post_init__(self):
        if (self.positions is None) == (self.gains is None):
            raise TopologyError("give exactly one of positions / gains")
        if self.positions is not None:
            pos = tuple(_point(p) for p in self.positions)
            object.__setattr__(self, "positions", pos)
            D = len(pos)
        else:
            rows = tuple(tuple(float(v) for v in row) for row in self.gains)
            object.__setattr__(self, "gains", rows)
            D = len(rows) + 1
            if any(len(row) != D - 1 for row in rows):
                raise TopologyError(f"gains must be a {D - 1}x{D - 1} matrix")
        if D < 2:
            raise TopologyError(f"need at least 2 nodes, got D={D}")
        object.__setattr__(self, "powers", tuple(float(v) for v in self.powers))
        object.__setattr__(self, "noises", tuple(float(v) for v in self.noises))
        if len(self.powers) != D - 1:
            raise TopologyError(f"expected {D - 1} powers (nodes 1..{D - 1}), got {len(self.powers)}")
        if len(self.noises) != D - 1:
            raise TopologyError(f"expected {D - 1} noises (nodes 2..{D}), got {len(self.noises)}")
        if not all(math.isfinite(v) and v >= 0 for v in self.powers):
            raise TopologyError("powers must be finite and >= 0")
        if not all(math.isfinite(v) and v > 0 for v in self.noises):
            raise TopologyError("noise variances must be finite and > 0")
        if not (math.isfinite(self.kappa) and self.kappa > 0):
            raise TopologyError("kappa must be positive")
        if not (math.isfinite(self.eta) and self.eta >= 2):
            raise TopologyError("eta must be >= 2")

    @property
    def D(self) -> int:
        if self.positions is not None:
            return len(self.positions)
        return len(self.gains) + 1

    def power(self, i: int) -> float:
        """Transmit power of node i (1-based, 1 <= i <= D-1)."""
        if not 1 <= i <= self.D - 1:
            raise IndexError(f"node {i} does not transmit")
        return self.powers[i - 1]

    def noise(self, k: int) -> float:
        """Noise variance at receiver k (1-based, 2 <= k <= D)."""
        if not 2 <= k <= self.D:
            raise IndexError(f"node {k} does not receive")
        return self.noises[k - 2]

    def relabel(self, order: Sequence[int]) -> "Topology":
        """Topology with relays reordered; ``order`` lists old relay indices."""
        D = self.D
        if sorted(order) != list(range(2, D)):
            raise ValueError(f"{order!r} is not a permutation of relays 2..{D - 1}")
        nodes = [1, *order, D]
        powers = [self.powers[n - 1] for n in nodes[:-1]]
        noises = [self.noises[n - 2] for n in nodes[1:]]
        if self.positions is not None:
            return Topology(powers, noises, self.kappa, self.eta,
                            positions=tuple(self.positions[n - 1] for n in nodes))
        full = build_gain_matrix(self).values
        gains = [[full[a - 1, b - 1] for b in nodes[1:]] for a in nodes[:-1]]
        return Topology(powers, noises, self.kappa, self.eta, gains=gains)


def _point(p) -> tuple[float, float]:
    if len(p) != 2:
        raise TopologyError(f"positions are 2-D points, got {p!r}")
    x, y = float(p[0]), float(p[1])
    if not (math.isfinite(x) and math.isfinite(y)):
        raise TopologyError(f"non-finite coordinate {p!r}")
    return x, y


@dataclass(frozen=True, eq=False)
class GainMatrix:
    """Path-loss coefficients; ``values[i-1, k-1]`` is the gain from node i to node k."""

    values: np.ndarray

    def __call__(self, i: int, k: int) -> float:
        return float(self.values[i - 1, k - 1])

    @property
    def D(self) -> int:
        return self.values.shape[0]

    def snr(self, topo: Topology) -> np.ndarray:
        """Matrix of received SNRs ``lambda_{i,k} P_i / N_k`` (0 where undefined)."""
        D = self.D
        out = np.zeros((D, D))
        P = np.asarray(topo.powers)
        N = np.asarray(topo.noises)
        out[: D - 1, 1:] = self.values[: D - 1, 1:] * P[:, None] / N[None, :]
        np.fill_diagonal(out, 0.0)
        return out


def path_loss(d: float, kappa: float, eta: float) -> float:
    if d < 1:
        return kappa
    return kappa * d ** (-eta)


def build_gain_matrix(topology: Topology) -> GainMatrix:
    """Pairwise gains from node positions, or the validated explicit override.

    An override is a (D-1)x(D-1) matrix whose row r is transmitter r+1 and
    column c is receiver c+2; entries with transmitter == receiver are ignored.
    """
    D = topology.D
    lam = np.zeros((D, D))
    if topology.gains is not None:
        g = np.asarray(topology.gains, dtype=float)
        if not np.all(np.isfinite(g)):
            raise TopologyError("gain override has non-finite entries")
        if np.any(g < 0):
            raise TopologyError("gain override has negative entries")
        lam[: D - 1, 1:] = g
    else:
        pts = np.asarray(topology.positions)
        for i in range(D - 1):
            for k in range(1, D):
                if i != k:
                    d = float(np.hypot(*(pts[i] - pts[k])))
                    lam[i, k] = path_loss(d, topology.kappa, topology.eta)
    np.fill_diagonal(lam, 0.0)
    return GainMatrix(lam)


@dataclass(frozen=True)
class TransmitState:
    """One transmit/listen assignment of the D-2 relays.

    ``index`` is the canonical index: relay 2 is the most significant bit and
    a set bit means the relay transmits, so for D=4 (L,L)->0, (L,T)->1,
    (T,L)->2, (T,T)->3.
    """

    D: int
    index: int

    def transmits(self, node: int) -> bool:
        return bool((self.index >> (self.D - 1 - node)) & 1)

    @property
    def vector(self) -> tuple[str, ...]:
        return tuple("T" if self.transmits(r) else "L" for r in range(2, self.D))

    @property
    def transmitting(self) -> frozenset[int]:
        return frozenset(r for r in range(2, self.D) if self.transmits(r))

    @property
    def listening(self) -> frozenset[int]:
        return frozenset(r for r in range(2, self.D) if not self.transmits(r))

    @property
    def label(self) -> str:
        return "(" + ",".join(self.vector) + ")"

    @classmethod
    def from_vector(cls, vector: Sequence[str]) -> "TransmitState":
        index = 0
        for s in vector:
            if s not in ("L", "T"):
                raise ValueError(f"state entries are 'L' or 'T', got {s!r}")
            index = (index << 1) | (s == "T")
        return cls(len(vector) + 2, index)


def enumerate_states(D: int) -> list[TransmitState]:
    check_node_count(D)
    return [TransmitState(D, j) for j in range(2 ** (D - 2))]


def validate_schedule(p, D: int) -> np.ndarray:
    """Return ``p`` as a clean probability vector or raise :class:`ScheduleError`.

    Entries in [-1e-12, 0) are clamped to zero.
    """
    check_node_count(D)
    arr = np.asarray(p, dtype=float).ravel()
    M = 2 ** (D - 2)
    if arr.size != M:
        raise ScheduleError(f"schedule for D={D} needs {M} entries, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise ScheduleError("schedule has non-finite entries")
    if np.any(arr < -SCHEDULE_TOL):
        raise ScheduleError(f"negative probability {arr.min():g}")
    arr = np.where(arr < 0, 0.0, arr)
    total = arr.sum()
    if abs(total - 1.0) > SCHEDULE_TOL:
        raise ScheduleError(f"probabilities sum to {total!r}, not 1")
    return arr

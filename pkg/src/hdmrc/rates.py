"""Closed-form rates for the phase-fading half-duplex relay network.

Every rate is affine in the schedule, so the workhorses here are the
coefficient matrices :func:`reception_rows` and :func:`cut_rows`: row i holds
the rate each state contributes when it is used with probability one.
Rates are in bits per channel use.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from .model import GainMatrix, Topology, check_node_count, validate_schedule

TIE_RTOL = 1e-9


def gamma(x):
    """Gaussian capacity function log2(1 + x)."""
    return np.log2(1.0 + np.asarray(x, dtype=float))


def _transmit_table(D: int) -> np.ndarray:
    """(M, D) boolean table: node n (column n-1) transmits in state j.

    The source transmits in every state and the destination never does.
    """
    check_node_count(D)
    M = 2 ** (D - 2)
    j = np.arange(M)[:, None]
    relays = np.arange(2, D)[None, :]
    table = np.zeros((M, D), dtype=bool)
    table[:, 0] = True
    table[:, 1 : D - 1] = (j >> (D - 1 - relays)) & 1
    return table


def reception_rows(g: GainMatrix, topo: Topology) -> np.ndarray:
    """(D-1, M) matrix; row i-2 gives node i's reception rate per state.

    Node i earns rate only in states where it listens; inside the log it
    hears the source plus every transmitting relay with a smaller index.
    """
    D = topo.D
    snr = g.snr(topo)
    tx = _transmit_table(D)
    rows = np.zeros((D - 1, tx.shape[0]))
    for i in range(2, D + 1):
        upstream = tx[:, : i - 1].astype(float) @ snr[: i - 1, i - 1]
        listens = ~tx[:, i - 1]
        rows[i - 2] = np.where(listens, gamma(upstream), 0.0)
    return rows


def _subset_mask(Q, D: int) -> np.ndarray:
    members = set(Q)
    bad = members - set(range(2, D))
    if bad:
        raise ValueError(f"cut set may only contain relays 2..{D - 1}, got {sorted(bad)}")
    mask = np.zeros(D, dtype=bool)
    for r in members:
        mask[r - 1] = True
    return mask


def _cut_row(qmask: np.ndarray, tx: np.ndarray, snr: np.ndarray) -> np.ndarray:
    D = tx.shape[1]
    left = qmask.copy()
    left[0] = True
    senders = (tx & left[None, :]).astype(float)
    right = ~left
    right[D - 1] = True
    receivers = (~tx & right[None, :]).astype(float)
    # one log of the summed cross-cut SNR per state
    return gamma(np.einsum("si,ik,sk->s", senders, snr, receivers))


def cut_rows(g: GainMatrix, topo: Topology) -> np.ndarray:
    """(2^(D-2), M) matrix; row q is the cut rate for relay subset q.

    Subsets use the same bit convention as states: relay 2 is the most
    significant bit of q.
    """
    D = topo.D
    snr = g.snr(topo)
    tx = _transmit_table(D)
    qtable = _transmit_table(D)  # reuse: relay bits of q mark membership in Q
    return np.stack([_cut_row(qtable[q], tx, snr) for q in range(qtable.shape[0])])


def subset_from_index(q: int, D: int) -> frozenset[int]:
    return frozenset(r for r in range(2, D) if (q >> (D - 1 - r)) & 1)


def reception_rate(i: int, p, g: GainMatrix, topo: Topology) -> float:
    D = topo.D
    if not 2 <= i <= D:
        raise IndexError(f"reception rate defined for nodes 2..{D}, got {i}")
    p = validate_schedule(p, D)
    return float(reception_rows(g, topo)[i - 2] @ p)


def reception_rates(p, g: GainMatrix, topo: Topology) -> dict[int, float]:
    p = validate_schedule(p, topo.D)
    r = reception_rows(g, topo) @ p
    return {i: float(r[i - 2]) for i in range(2, topo.D + 1)}


def argmin_nodes(rates: dict[int, float], rtol: float = TIE_RTOL) -> tuple[float, tuple[int, ...]]:
    m = min(rates.values())
    tol = rtol * abs(m)
    return m, tuple(i for i, v in sorted(rates.items()) if v - m <= tol)


def df_rate(p, g: GainMatrix, topo: Topology) -> tuple[float, tuple[int, ...]]:
    """DF rate of a fixed schedule and every node attaining it."""
    return argmin_nodes(reception_rates(p, g, topo))


def cut_rate(Q, p, g: GainMatrix, topo: Topology) -> float:
    D = topo.D
    qmask = _subset_mask(Q, D)
    p = validate_schedule(p, D)
    return float(_cut_row(qmask, _transmit_table(D), g.snr(topo)) @ p)


def cutset_min(p, g: GainMatrix, topo: Topology) -> tuple[float, frozenset[int]]:
    """Smallest cut rate over all relay subsets, with one minimizing subset."""
    D = topo.D
    p = validate_schedule(p, D)
    values = cut_rows(g, topo) @ p
    q = int(np.argmin(values))
    return float(values[q]), subset_from_index(q, D)


def full_duplex_rates(g: GainMatrix, topo: Topology) -> dict[int, float]:
    snr = g.snr(topo)
    return {i: float(gamma(snr[: i - 1, i - 1].sum())) for i in range(2, topo.D + 1)}


def full_duplex_df_rate(g: GainMatrix, topo: Topology) -> tuple[float, int]:
    """Full-duplex DF rate with its (first) bottleneck node."""
    rates = full_duplex_rates(g, topo)
    node = min(rates, key=lambda i: (rates[i], i))
    return rates[node], node


def is_rsnr_degraded(g: GainMatrix, topo: Topology) -> tuple[bool, Optional[tuple[int, int, int]]]:
    """Check that the SNR from every node strictly falls with receiver index.

    Returns ``(True, None)`` or ``(False, (i, j, k))`` for the first triple
    i < j < k in lexicographic order with SNR(i->j) <= SNR(i->k).
    """
    snr = g.snr(topo)
    D = topo.D
    for i in range(1, D + 1):
        for j in range(i + 1, D + 1):
            for k in range(j + 1, D + 1):
                if not snr[i - 1, j - 1] > snr[i - 1, k - 1]:
                    return False, (i, j, k)
    return True, None

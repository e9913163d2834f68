"""Decode-forward rates and optimal transmit/listen schedules for
phase-fading half-duplex multiple-relay networks."""

from .linprog import LinearProgram, LPSolution, equality_constrained_max, maximin_lp, solve_lp
from .model import (
    GainMatrix,
    PreconditionError,
    ScheduleError,
    Topology,
    TopologyError,
    TransmitState,
    build_gain_matrix,
    enumerate_states,
    validate_schedule,
)
from .rates import (
    cut_rate,
    cutset_min,
    df_rate,
    full_duplex_df_rate,
    gamma,
    is_rsnr_degraded,
    reception_rate,
    reception_rates,
)
from .sched import (
    NotDegradedError,
    SolveReport,
    best_decoding_order,
    cutset_bound_opt,
    four_node_closed_form,
    grid_oracle,
    solve_algorithm1,
    solve_algorithm2,
    solve_algorithm3,
)

__version__ = "0.1.0"

__all__ = [
    "LinearProgram",
    "LPSolution",
    "equality_constrained_max",
    "maximin_lp",
    "solve_lp",
    "GainMatrix",
    "PreconditionError",
    "ScheduleError",
    "Topology",
    "TopologyError",
    "TransmitState",
    "build_gain_matrix",
    "enumerate_states",
    "validate_schedule",
    "cut_rate",
    "cutset_min",
    "df_rate",
    "full_duplex_df_rate",
    "gamma",
    "is_rsnr_degraded",
    "reception_rate",
    "reception_rates",
    "NotDegradedError",
    "SolveReport",
    "best_decoding_order",
    "cutset_bound_opt",
    "four_node_closed_form",
    "grid_oracle",
    "solve_algorithm1",
    "solve_algorithm2",
    "solve_algorithm3",
]

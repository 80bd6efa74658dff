"""Scheduling prebunk deliveries against misinformation cascades on social networks."""
from .cascade import CascadeState, OriginationParams, Trace, simulate
from .cost import ActionLog, cost_series, feasibility_check, max_cost
from .netgraph import WeightedDigraph, chung_lu_generate, local_neighborhood, power_law_weights
from .policy import POLICY_NAMES, make_policy
from .schedule import relaxed_minimax_solve, solve_equidistant_lp

__all__ = [
    "ActionLog",
    "CascadeState",
    "OriginationParams",
    "POLICY_NAMES",
    "Trace",
    "WeightedDigraph",
    "chung_lu_generate",
    "cost_series",
    "feasibility_check",
    "local_neighborhood",
    "make_policy",
    "max_cost",
    "power_law_weights",
    "relaxed_minimax_solve",
    "simulate",
    "solve_equidistant_lp",
]

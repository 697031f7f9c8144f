"""Budget-constrained set combinatorial optimization on graphs.

Pipeline: probabilistic-greedy supervision labels -> budget-indexed noise
pruning -> GCN node-quality scores -> fitted n-step Q-learning selection,
plus classical baselines (greedy, CELF, stochastic greedy) and exact
desk-scale oracles for verification.  A FastAPI service exposes the
pipeline; the CLI is a thin client of that service.
"""

__version__ = "0.1.0"

from .graph import Graph, WeightModel, assign_weights, gen_ba, gen_bp, load_edge_list, to_bipartite, write_edge_list
from .objectives import CoverState, ObjectiveSpec, eval_objective, exact_spread, ic_spread_samples, marginal_gain
from .baselines import SolveResult, celf, exact_mcp, greedy, stochastic_greedy

__all__ = [
    "Graph",
    "WeightModel",
    "assign_weights",
    "gen_ba",
    "gen_bp",
    "load_edge_list",
    "to_bipartite",
    "write_edge_list",
    "CoverState",
    "ObjectiveSpec",
    "eval_objective",
    "exact_spread",
    "ic_spread_samples",
    "marginal_gain",
    "SolveResult",
    "celf",
    "exact_mcp",
    "greedy",
    "stochastic_greedy",
]

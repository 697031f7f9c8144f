"""Budget-indexed noise pruning.

Nodes are ranked by their raw feature (outgoing weight sum, descending).
For each normalized budget, the worst rank that ever appears in a
budget-sized solution prefix across all training graphs and runs becomes
a percentile cutoff; cutoffs at unseen budgets are linearly interpolated.
Pruning keeps exactly the nodes ranked at or above the cutoff.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .util import open_for_read
from .errors import DataError, UsageError
from .graph import Graph
from .supervision import SolutionTrace

# fitting grid; the largest observed normalized budget is always appended
DEFAULT_BUDGET_GRID = (0.0005, 0.001, 0.002, 0.005, 0.01, 0.02, 0.05)


@dataclass
class NoiseCutoffModel:
    """Piecewise-linear map from normalized budget to percentile cutoff."""

    knots: list[tuple[float, float]]
    b_max_norm: float

    def cutoff(self, b_norm: float) -> float:
        if not self.knots:
            raise UsageError("noise model has no knots")
        bs = np.array([k[0] for k in self.knots])
        ps = np.array([k[1] for k in self.knots])
        return float(np.interp(b_norm, bs, ps))


def feature_ranks(g: Graph) -> np.ndarray:
    """rank[v]: position of v ordered by descending feature, ties by id."""
    order = np.lexsort((np.arange(g.node_count), -g.out_weight_sum))
    ranks = np.empty(g.node_count, dtype=np.int64)
    ranks[order] = np.arange(g.node_count)
    return ranks


def fit_noise(
    graphs: list[Graph],
    traces_per_graph: list[list[SolutionTrace]],
    budgets: list[float] | None = None,
) -> NoiseCutoffModel:
    """Fit percentile cutoffs from training traces.

    Cutoffs are forced non-decreasing in the budget with a running max;
    the raw per-budget maxima can dip on small samples but pruning must
    never shrink when the budget grows."""
    if len(graphs) != len(traces_per_graph) or not graphs:
        raise UsageError("need one trace list per training graph")
    if any(not traces for traces in traces_per_graph):
        raise UsageError("every training graph needs at least one trace")
    b_max_norm = max(
        max(len(t.picks) for t in traces) / g.node_count
        for g, traces in zip(graphs, traces_per_graph)
    )
    if b_max_norm <= 0.0:
        raise DataError("all traces are empty; cannot fit noise cutoffs")
    if budgets is None:
        budgets = [b for b in DEFAULT_BUDGET_GRID if b < b_max_norm] + [b_max_norm]
    else:
        budgets = sorted(set(budgets))
        if budgets[0] <= 0.0 or budgets[-1] > b_max_norm:
            raise UsageError(f"budgets must lie in (0, {b_max_norm}]")
    all_ranks = [feature_ranks(g) for g in graphs]
    knots: list[tuple[float, float]] = []
    running = 0.0
    for b in budgets:
        worst_pct = -1.0
        for g, traces, ranks in zip(graphs, traces_per_graph, all_ranks):
            k = math.ceil(b * g.node_count)
            worst_rank = -1
            for t in traces:
                prefix = t.prefix_nodes(k)
                if prefix:
                    worst_rank = max(worst_rank, int(ranks[prefix].max()))
            if worst_rank >= 0:
                worst_pct = max(worst_pct, worst_rank / g.node_count * 100.0)
        if worst_pct < 0.0:
            continue
        running = max(running, worst_pct)
        knots.append((b, running))
    if not knots:
        raise DataError("no budget produced a cutoff")
    return NoiseCutoffModel(knots, b_max_norm)


def predict_good_nodes(model: NoiseCutoffModel, g: Graph, b_norm: float) -> np.ndarray:
    """Node ids whose feature percentile is at or below the interpolated
    cutoff for this budget (boundary nodes are kept)."""
    if b_norm <= 0.0:
        raise UsageError(f"normalized budget must be > 0, got {b_norm}")
    cutoff = model.cutoff(b_norm)
    pct = feature_ranks(g) / g.node_count * 100.0
    return np.flatnonzero(pct <= cutoff)


def save_noise(model: NoiseCutoffModel, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("noise-v1\n")
        for b, pct in model.knots:
            fh.write(f"knot {b:.17g} {pct:.17g}\n")


def load_noise(path: str) -> NoiseCutoffModel:
    knots: list[tuple[float, float]] = []
    with open_for_read(path) as fh:
        header = fh.readline().strip()
        if header != "noise-v1":
            raise DataError(f"{path}: bad noise model header {header!r}")
        for lineno, line in enumerate(fh, start=2):
            parts = line.split()
            if not parts:
                continue
            if parts[0] != "knot" or len(parts) != 3:
                raise DataError(f"{path}:{lineno}: unrecognized knot line {line!r}")
            knots.append((float(parts[1]), float(parts[2])))
    if not knots:
        raise DataError(f"{path}: noise model has no knots")
    return NoiseCutoffModel(knots, b_max_norm=knots[-1][0])

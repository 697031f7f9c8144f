"""Probabilistic-greedy sampling of the solution space and per-node score
targets.

Each run picks nodes with probability proportional to their current
marginal gain and stops once the sampled node's gain drops to the
convergence threshold.  Aggregating m runs yields soft supervision:
score(v) = sum of v's gains across runs / sum of run objectives, which
sums to exactly 1 over nodes for deterministic objectives because the
per-run gains telescope to the run's final value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .util import open_for_read
from .errors import DataError, UsageError
from .graph import Graph
from .objectives import CoverState, ObjectiveSpec, candidate_nodes, eval_objective, marginal_gain
from .seeds import derive_seed

DEFAULT_DELTA = 0.01
DEFAULT_RUNS = 30


@dataclass
class SolutionTrace:
    """One probabilistic-greedy run: ordered (node, gain) picks."""

    picks: list[tuple[int, float]]
    final_value: float
    graph_id: str
    run_index: int
    node_count: int

    def prefix_nodes(self, count: int) -> list[int]:
        return [v for v, _ in self.picks[:count]]


@dataclass
class NodeScoreTable:
    """Per-node regression targets plus run bookkeeping."""

    scores: np.ndarray
    m: int
    sum_final: float
    b_max_norm: float


def prob_greedy(
    g: Graph,
    spec: ObjectiveSpec,
    delta: float = DEFAULT_DELTA,
    seed: int = 0,
    graph_id: str = "",
    run_index: int = 0,
) -> SolutionTrace:
    """Run one probabilistic-greedy pass and record its trace."""
    if delta <= 0:
        raise UsageError(f"delta must be > 0, got {delta}")
    rng = np.random.default_rng(seed)
    cands = candidate_nodes(g, spec.kind)
    picks: list[tuple[int, float]] = []
    if spec.kind in ("mcp", "mvc"):
        state = CoverState(g, spec.kind)
        remaining = cands.copy()
        while remaining.size:
            counts = state.gain_counts(remaining)
            positive = counts > 0
            if not positive.any():
                break
            idx = np.flatnonzero(positive)
            weights = counts[idx].astype(np.float64)
            pick = int(rng.choice(idx, p=weights / weights.sum()))
            gain = counts[pick] / state.universe
            if gain <= delta:
                break
            v = int(remaining[pick])
            state.add(v)
            picks.append((v, gain))
            remaining = np.delete(remaining, pick)
        final = state.value()
    else:
        chosen: list[int] = []
        remaining_l = [int(v) for v in cands]
        while remaining_l:
            gains = np.array(
                [max(0.0, marginal_gain(g, spec, chosen, v)) for v in remaining_l]
            )
            if gains.sum() <= 0.0:
                break
            pick = int(rng.choice(len(remaining_l), p=gains / gains.sum()))
            gain = float(gains[pick])
            if gain <= delta:
                break
            v = remaining_l[pick]
            chosen.append(v)
            picks.append((v, gain))
            remaining_l.remove(v)
        final = eval_objective(g, spec, chosen) if chosen else 0.0
    return SolutionTrace(picks, final, graph_id, run_index, g.node_count)


def sample_traces(
    g: Graph,
    spec: ObjectiveSpec,
    m: int = DEFAULT_RUNS,
    delta: float = DEFAULT_DELTA,
    seed: int = 0,
    graph_id: str = "",
) -> list[SolutionTrace]:
    """m independent traces with per-run derived seeds."""
    return [
        prob_greedy(g, spec, delta, derive_seed(seed, "pg", graph_id, i), graph_id, i)
        for i in range(m)
    ]


def build_scores(traces: list[SolutionTrace]) -> NodeScoreTable:
    """Aggregate traces into per-node scores (gain share of total value)."""
    if not traces:
        raise UsageError("build_scores needs at least one trace")
    graph_ids = {t.graph_id for t in traces}
    if len(graph_ids) > 1:
        raise UsageError(f"traces span multiple graphs: {sorted(graph_ids)}")
    n = traces[0].node_count
    per_node: dict[int, list[float]] = {}
    for t in traces:
        for v, gain in t.picks:
            per_node.setdefault(v, []).append(gain)
    sum_final = math.fsum(t.final_value for t in traces)
    if sum_final <= 0.0:
        raise DataError("all traces have zero objective; nothing to score")
    scores = np.zeros(n, dtype=np.float64)
    for v, gains in per_node.items():
        scores[v] = math.fsum(gains) / sum_final
    b_max_norm = max(len(t.picks) for t in traces) / n
    return NodeScoreTable(scores, len(traces), sum_final, b_max_norm)


# ---------------------------------------------------------------------------
# Persistence


def save_traces(traces: list[SolutionTrace], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for t in traces:
            fh.write(f"trace {t.run_index} {t.final_value:.17g}\n")
            for v, gain in t.picks:
                fh.write(f"pick {v} {gain:.17g}\n")


def load_traces(path: str, node_count: int, graph_id: str = "") -> list[SolutionTrace]:
    traces: list[SolutionTrace] = []
    with open_for_read(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "trace" and len(parts) == 3:
                traces.append(
                    SolutionTrace([], float(parts[2]), graph_id, int(parts[1]), node_count)
                )
            elif parts[0] == "pick" and len(parts) == 3 and traces:
                traces[-1].picks.append((int(parts[1]), float(parts[2])))
            else:
                raise DataError(f"{path}:{lineno}: unrecognized trace line {line!r}")
    return traces


def save_scores(table: NodeScoreTable, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(
            f"scores-v1 {table.scores.shape[0]} {table.m} "
            f"{table.sum_final:.17g} {table.b_max_norm:.17g}\n"
        )
        for v in np.flatnonzero(table.scores):
            fh.write(f"score {v} {table.scores[v]:.17g}\n")


def load_scores(path: str) -> NodeScoreTable:
    with open_for_read(path) as fh:
        header = fh.readline().split()
        if len(header) != 5 or header[0] != "scores-v1":
            raise DataError(f"{path}: bad scores header")
        n, m = int(header[1]), int(header[2])
        sum_final, b_max_norm = float(header[3]), float(header[4])
        scores = np.zeros(n, dtype=np.float64)
        for lineno, line in enumerate(fh, start=2):
            parts = line.split()
            if not parts:
                continue
            if parts[0] != "score" or len(parts) != 3:
                raise DataError(f"{path}:{lineno}: unrecognized score line {line!r}")
            scores[int(parts[1])] = float(parts[2])
    return NodeScoreTable(scores, m, sum_final, b_max_norm)

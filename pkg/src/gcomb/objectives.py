"""Objective functions and marginal gains for MCP, MVC and IM.

MCP and MVC are exact set-coverage counts maintained incrementally in a
CoverState.  IM is the expected Independent Cascade spread estimated by
Monte Carlo over live-edge worlds; each simulation's world is a pure
function of (seed, salt, simulation index, arc index), which makes the
estimator deterministic, order-independent, safely parallel, and lets
marginal gains share worlds between S and S + {v} (common random
numbers).  A tiny exact oracle enumerates all live-edge worlds.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import UsageError
from .graph import SIDE_A, Graph
from .util import hash_unit, ragged_arcs, segment_sums, stream_keys, worker_count

KINDS = ("mcp", "mvc", "im")


@dataclass
class ObjectiveSpec:
    """Which objective to optimize and how to estimate it (IM only)."""

    kind: str
    mc_sims: int = 1000
    rng_seed: int = 0
    common_random_numbers: bool = True
    _calls: int = field(default=0, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise UsageError(f"unknown objective kind {self.kind!r}")
        if self.mc_sims < 1:
            raise UsageError("mc_sims must be >= 1")

    def _salt(self) -> int:
        """World salt: fixed under common random numbers, fresh otherwise."""
        if self.common_random_numbers:
            return 0
        self._calls += 1
        return self._calls


class CoverState:
    """Incremental coverage bookkeeping for MCP (over side-B nodes) and
    MVC (over edges).  Adding node v marks everything v covers in
    O(out-degree of v)."""

    def __init__(self, g: Graph, kind: str):
        if kind == "mcp":
            if not g.bipartite:
                raise UsageError("MCP requires a bipartite graph")
            self.universe = int(np.count_nonzero(g.side == 1))
            self.covered = np.zeros(g.node_count, dtype=bool)
            self._arc_slot = g.nbr
        elif kind == "mvc":
            edge_ids, n_edges = g.edge_ids()
            self.universe = n_edges
            self.covered = np.zeros(n_edges, dtype=bool)
            self._arc_slot = edge_ids
        else:
            raise UsageError(f"CoverState does not apply to {kind!r}")
        self.g = g
        self.kind = kind
        self.covered_count = 0
        self.chosen: list[int] = []

    def value(self) -> float:
        return self.covered_count / self.universe if self.universe else 0.0

    def gain_count(self, v: int) -> int:
        """Number of newly covered items if v were added."""
        arcs = slice(self.g.indptr[v], self.g.indptr[v + 1])
        return int(np.count_nonzero(~self.covered[self._arc_slot[arcs]]))

    def gain_counts(self, candidates: np.ndarray) -> np.ndarray:
        """Vectorized gain_count over a candidate id array."""
        arcs, counts = ragged_arcs(self.g.indptr, candidates)
        fresh = (~self.covered[self._arc_slot[arcs]]).astype(np.int64)
        return segment_sums(fresh, counts)

    def add(self, v: int) -> int:
        """Add v, returning the number of newly covered items."""
        arcs = slice(self.g.indptr[v], self.g.indptr[v + 1])
        slots = self._arc_slot[arcs]
        gained = int(np.count_nonzero(~self.covered[slots]))
        self.covered[slots] = True
        self.covered_count += gained
        self.chosen.append(int(v))
        return gained


def candidate_nodes(g: Graph, kind: str) -> np.ndarray:
    """Nodes eligible for selection: side A for MCP, everything else."""
    if kind == "mcp":
        return g.side_nodes(SIDE_A)
    return np.arange(g.node_count, dtype=np.int64)


def _check_candidates(g: Graph, kind: str, S) -> None:
    if kind == "mcp":
        for v in S:
            if g.side is None or g.side[v] != SIDE_A:
                raise UsageError(f"MCP solution may only contain side-A nodes, got {v}")


def eval_objective(g: Graph, spec: ObjectiveSpec, S) -> float:
    """Objective value f(S) in [0, 1]."""
    S = list(S)
    if spec.kind in ("mcp", "mvc"):
        _check_candidates(g, spec.kind, S)
        state = CoverState(g, spec.kind)
        for v in S:
            state.add(v)
        return state.value()
    return float(
        np.mean(ic_spread_samples(g, S, spec.mc_sims, spec.rng_seed, spec._salt()))
    )


def marginal_gain(g: Graph, spec: ObjectiveSpec, state, v: int) -> float:
    """f(S + {v}) - f(S).

    ``state`` is a CoverState for MCP/MVC (fast incremental path) or any
    iterable of chosen nodes.  For IM the two estimates share live-edge
    worlds when common random numbers are on.
    """
    if isinstance(state, CoverState):
        if v in state.chosen:
            raise UsageError(f"node {v} already in solution")
        return state.gain_count(v) / state.universe if state.universe else 0.0
    S = list(state)
    if v in S:
        raise UsageError(f"node {v} already in solution")
    if spec.kind in ("mcp", "mvc"):
        return eval_objective(g, spec, S + [v]) - eval_objective(g, spec, S)
    salt = spec._salt()
    with_v = ic_spread_samples(g, S + [v], spec.mc_sims, spec.rng_seed, salt)
    base = ic_spread_samples(g, S, spec.mc_sims, spec.rng_seed, salt)
    return float(np.mean(with_v - base))


# ---------------------------------------------------------------------------
# Independent Cascade


def _spread_chunk(g: Graph, seeds: list[int], sim_keys: np.ndarray) -> np.ndarray:
    """Fraction of nodes activated per simulation for one chunk of sims."""
    m = sim_keys.shape[0]
    n = g.node_count
    active = np.zeros((m, n), dtype=bool)
    if seeds:
        active[:, seeds] = True
    frontier = active.copy()
    while True:
        sims, nodes = np.nonzero(frontier)
        if sims.size == 0:
            break
        arcs, counts = ragged_arcs(g.indptr, nodes)
        if arcs.size == 0:
            break
        sim_rep = np.repeat(sims, counts)
        draw = hash_unit(sim_keys[sim_rep] ^ (arcs.astype(np.uint64) + np.uint64(1)))
        live = draw < g.wt[arcs]
        hit_sim = sim_rep[live]
        hit_node = g.nbr[arcs[live]]
        fresh = ~active[hit_sim, hit_node]
        active[hit_sim, hit_node] = True
        frontier = np.zeros((m, n), dtype=bool)
        frontier[hit_sim[fresh], hit_node[fresh]] = True
    return active.sum(axis=1) / n


def ic_spread_samples(
    g: Graph, S, sims: int, seed: int, salt: int = 0
) -> np.ndarray:
    """Per-simulation IC spread fractions for seed set S.

    Simulation i's live-edge world depends only on (seed, salt, i), so
    results are identical however the work is chunked or threaded.
    """
    seeds = [int(v) for v in S]
    if g.node_count == 0:
        return np.zeros(sims)
    sim_keys = stream_keys(seed, salt, sims)
    chunk = max(1, min(sims, (1 << 21) // max(1, g.node_count)))
    spans = [(lo, min(lo + chunk, sims)) for lo in range(0, sims, chunk)]
    workers = min(worker_count(), len(spans))
    if workers <= 1:
        parts = [_spread_chunk(g, seeds, sim_keys[lo:hi]) for lo, hi in spans]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(
                pool.map(lambda span: _spread_chunk(g, seeds, sim_keys[span[0] : span[1]]), spans)
            )
    return np.concatenate(parts)


def exact_spread(g: Graph, S) -> float:
    """Exact expected IC spread by enumerating all live-edge worlds.

    Only arcs with 0 < w < 1 branch; each world is weighted by its
    probability and its spread is the fraction reachable from S."""
    n_arcs = g.arc_count
    if g.edge_count > 20:
        raise UsageError(f"exact_spread refuses graphs with more than 20 edges (got {g.edge_count})")
    seeds = [int(v) for v in S]
    src = np.repeat(np.arange(g.node_count), g.out_degrees)
    uncertain = [a for a in range(n_arcs) if 0.0 < g.wt[a] < 1.0]
    certain = [a for a in range(n_arcs) if g.wt[a] == 1.0]
    total = 0.0
    for mask in range(1 << len(uncertain)):
        prob = 1.0
        live = list(certain)
        for i, a in enumerate(uncertain):
            if mask >> i & 1:
                prob *= g.wt[a]
                live.append(a)
            else:
                prob *= 1.0 - g.wt[a]
        adj: dict[int, list[int]] = {}
        for a in live:
            adj.setdefault(int(src[a]), []).append(int(g.nbr[a]))
        seen = set(seeds)
        stack = list(seeds)
        while stack:
            u = stack.pop()
            for v in adj.get(u, ()):
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        total += prob * len(seen) / g.node_count
    return total

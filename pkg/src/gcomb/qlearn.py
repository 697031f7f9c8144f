"""Combinatorial selection head: locality features with optional
importance-sampled estimation, a linear 4-matrix Q-network, fitted n-step
Q-learning with experience replay, and budget-b greedy inference.

The Q-network sees two numbers per node: its predicted quality and its
locality (count of its neighbors not yet covered by the chosen set's
neighborhoods).  Set summaries are componentwise maxima.  Both features
are scaled per graph before entering the network; raw quality lives on a
probability scale while locality is an integer count, and mixing them
unscaled makes the shared linear layers ill-conditioned.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass

import numpy as np

from .errors import DataError, NumericError, UsageError
from .graph import Graph
from .gcn import GcnParams, gcn_forward
from .noise import NoiseCutoffModel, feature_ranks, predict_good_nodes
from .objectives import CoverState, ObjectiveSpec, eval_objective, marginal_gain
from .optim import Adam
from .baselines import SolveResult, _clip_budget
from .seeds import derive_seed
from .util import open_for_read, ragged_arcs, segment_sums

DEFAULT_MQ = 32
DEFAULT_N_STEP = 2
DEFAULT_GAMMA = 0.8
DEFAULT_Q_LR = 5e-4
DEFAULT_REPLAY_CAPACITY = 50
DEFAULT_BATCH = 8
EPS_FLOOR = 0.05
EPS_DECAY = 0.9

log = logging.getLogger(__name__)


@dataclass
class QParams:
    """Three (m, 2) input matrices (candidates, chosen set, action node)
    and the final (3m,) readout; 9m parameters total."""

    t1: np.ndarray
    t2: np.ndarray
    t3: np.ndarray
    t4: np.ndarray

    @property
    def m_q(self) -> int:
        return self.t1.shape[0]

    @property
    def param_count(self) -> int:
        return self.t1.size + self.t2.size + self.t3.size + self.t4.size

    def check_shapes(self) -> None:
        m = self.m_q
        for name, mat in (("t1", self.t1), ("t2", self.t2), ("t3", self.t3)):
            if mat.shape != (m, 2):
                raise UsageError(f"{name} shape {mat.shape}, expected {(m, 2)}")
        if self.t4.shape != (3 * m,):
            raise UsageError(f"t4 shape {self.t4.shape}, expected {(3 * m,)}")

    def copy(self) -> "QParams":
        return QParams(self.t1.copy(), self.t2.copy(), self.t3.copy(), self.t4.copy())

    def as_dict(self) -> dict[str, np.ndarray]:
        return {"t1": self.t1, "t2": self.t2, "t3": self.t3, "t4": self.t4}


def init_q_params(m_q: int = DEFAULT_MQ, seed: int = 0) -> QParams:
    rng = np.random.default_rng(seed)

    def glorot(rows, cols):
        bound = math.sqrt(6.0 / (rows + cols))
        return rng.uniform(-bound, bound, size=(rows, cols))

    return QParams(
        glorot(m_q, 2), glorot(m_q, 2), glorot(m_q, 2), glorot(1, 3 * m_q)[0]
    )


# ---------------------------------------------------------------------------
# Importance sampling


def sample_size(universe_size: int, eps: float) -> int:
    """Hoeffding-derived draw count, clamped to the universe size."""
    if universe_size < 1:
        raise UsageError("universe must be nonempty")
    if not (0.0 < eps < 1.0):
        raise UsageError(f"eps must be in (0, 1), got {eps}")
    z = math.ceil(math.log(2.0 * universe_size * universe_size) / (2.0 * eps * eps))
    return min(max(z, 1), universe_size)


@dataclass
class ImportanceSampler:
    """Score-proportional node sampler with inverse-importance weights.

    Nodes with nonpositive score are excluded up front; if none remain
    the sampler degrades to uniform draws with uniform weights (flagged
    via ``uniform_fallback``).
    """

    universe: np.ndarray
    importance: np.ndarray
    z: int
    eps: float
    seed: int
    uniform_fallback: bool = False

    @property
    def mu_universe(self) -> float:
        return 1.0 / self.universe.shape[0]

    def draw(self, t: int) -> tuple[np.ndarray, np.ndarray]:
        """Weighted sample for step t: (node ids, weights).

        When z saturates at the universe size (the clamped case) the
        sample degenerates to one copy of every node; otherwise z draws
        with replacement."""
        if self.z == self.universe.shape[0]:
            nodes = self.universe
        else:
            rng = np.random.default_rng(derive_seed(self.seed, "is", t))
            idx = rng.choice(self.universe.shape[0], size=self.z, p=self.importance)
            nodes = self.universe[idx]
        pos = np.searchsorted(self.universe, nodes)
        return nodes, 1.0 / self.importance[pos]

    def weighted_mean(self, nodes: np.ndarray, w_hat: np.ndarray) -> float:
        pos = np.searchsorted(self.universe, nodes)
        return float((w_hat * self.importance[pos]).sum() / w_hat.sum())


def make_sampler(
    g: Graph, good_nodes: np.ndarray, scores_by_node: np.ndarray, eps: float, seed: int
) -> ImportanceSampler:
    """Sampler over the out-neighborhood of the good nodes, importance
    proportional to predicted node quality."""
    arcs, _ = ragged_arcs(g.indptr, np.asarray(good_nodes, dtype=np.int64))
    universe = np.unique(g.nbr[arcs])
    if universe.size == 0:
        raise DataError("good nodes have no out-neighbors to sample")
    raw = scores_by_node[universe]
    positive = raw > 0.0
    if positive.any():
        universe = universe[positive]
        imp = raw[positive] / raw[positive].sum()
        fallback = False
    else:
        imp = np.full(universe.shape[0], 1.0 / universe.shape[0])
        fallback = True
    return ImportanceSampler(
        universe, imp, sample_size(universe.shape[0], eps), eps, seed, fallback
    )


# ---------------------------------------------------------------------------
# Episode state and locality


class EpisodeState:
    """Chosen set, candidate pool, and locality bookkeeping for one graph.

    The pool is the full non-pruned node set (the Q state space); every
    step summarizes it.  ``legal`` restricts which pool members may be
    *picked* (side-A nodes for MCP).  ``uncovered[u]`` is True until u
    enters the union of chosen nodes' neighborhoods; locality counts full
    out-neighborhoods, so pruned nodes still count toward it.
    """

    def __init__(
        self,
        g: Graph,
        good_nodes: np.ndarray,
        scores_by_node: np.ndarray,
        sampler: ImportanceSampler | None = None,
        legal: np.ndarray | None = None,
    ):
        self.g = g
        self.good = np.unique(np.asarray(good_nodes, dtype=np.int64))
        self.scores = scores_by_node
        self.sampler = sampler
        self.uncovered = np.ones(g.node_count, dtype=bool)
        self.chosen: list[int] = []
        self.cand = self.good.copy()
        self.legal_cand = (
            np.unique(np.asarray(legal, dtype=np.int64)) if legal is not None else self.good.copy()
        )
        smax = float(scores_by_node[self.good].max()) if self.good.size else 1.0
        self.smax = smax if smax > 0 else 1.0
        degs = g.out_degrees[self.good]
        self.dmax = float(degs.max()) if degs.size and degs.max() > 0 else 1.0
        self._sample: tuple[np.ndarray, np.ndarray] | None = None
        self._step = 0

    def refresh_sample(self) -> None:
        if self.sampler is not None:
            self._sample = self.sampler.draw(self._step)

    def locality(self, v: int) -> float:
        """Uncovered-neighbor count of v, exact or sampled estimate."""
        nbrs = self.g.neighbors(v)
        if nbrs.size == 0:
            return 0.0
        if self.sampler is None:
            return float(np.count_nonzero(self.uncovered[nbrs]))
        if self._sample is None:
            self.refresh_sample()
        nodes, w_hat = self._sample
        member = np.isin(nodes, nbrs)
        if member.any():
            w_sel = w_hat[member]
            unc = self.uncovered[nodes[member]]
        else:
            w_sel = w_hat
            unc = self.uncovered[nodes]
        frac = float((w_sel * unc).sum() / w_sel.sum())
        return nbrs.size * frac

    def _localities(self, nodes: np.ndarray) -> np.ndarray:
        if self.sampler is None:
            arcs, counts = ragged_arcs(self.g.indptr, nodes)
            fresh = self.uncovered[self.g.nbr[arcs]].astype(np.float64)
            return segment_sums(fresh, counts)
        return np.array([self.locality(int(v)) for v in nodes])

    def features_of(self, nodes: np.ndarray) -> np.ndarray:
        """(len(nodes), 2) scaled [quality, locality] features."""
        feats = np.empty((nodes.shape[0], 2))
        feats[:, 0] = self.scores[nodes] / self.smax
        feats[:, 1] = self._localities(nodes) / self.dmax
        return feats

    def summaries(self) -> tuple[np.ndarray, np.ndarray]:
        """MaxPool features of (candidates, chosen set)."""
        mu_c = (
            self.features_of(self.cand).max(axis=0)
            if self.cand.size
            else np.zeros(2)
        )
        if self.chosen:
            # chosen nodes have locality 0: their neighborhoods are covered
            mu_s = np.array([max(self.scores[v] for v in self.chosen) / self.smax, 0.0])
        else:
            mu_s = np.zeros(2)
        return mu_c, mu_s

    def apply(self, v: int) -> None:
        self.uncovered[self.g.neighbors(v)] = False
        self.chosen.append(int(v))
        self.cand = self.cand[self.cand != v]
        self.legal_cand = self.legal_cand[self.legal_cand != v]
        self._step += 1
        self._sample = None


# ---------------------------------------------------------------------------
# Q-network forward and loss


def q_values(params: QParams, mu_c: np.ndarray, mu_s: np.ndarray, mu_v: np.ndarray) -> np.ndarray:
    """Q' for one or many action nodes (mu_v: (2,) or (k, 2))."""
    m = params.m_q
    base = params.t4[:m] @ (params.t1 @ mu_c) + params.t4[m : 2 * m] @ (params.t2 @ mu_s)
    action = np.atleast_2d(mu_v) @ (params.t3.T @ params.t4[2 * m :])
    out = base + action
    return out if np.ndim(mu_v) > 1 else float(out[0])


def q_forward(params: QParams, state: EpisodeState, v: int) -> float:
    """Predicted n-step reward of adding v to the current set."""
    if v in state.chosen or v not in state.cand:
        raise UsageError(f"node {v} is not a candidate")
    params.check_shapes()
    mu_c, mu_s = state.summaries()
    mu_v = state.features_of(np.array([v]))[0]
    return q_values(params, mu_c, mu_s, mu_v)


def q_loss_and_grad(
    params: QParams,
    feats: list[tuple[np.ndarray, np.ndarray, np.ndarray]],
    targets: np.ndarray,
):
    """Mean squared loss of Q' against fixed targets, with gradients.

    Targets are treated as constants (semi-gradient fitted Q-iteration)."""
    m = params.m_q
    B = len(feats)
    grads = {k: np.zeros_like(v) for k, v in params.as_dict().items()}
    loss = 0.0
    for (mu_c, mu_s, mu_v), y in zip(feats, targets):
        q = q_values(params, mu_c, mu_s, mu_v)
        err = q - float(y)
        loss += err * err
        co = 2.0 * err / B
        grads["t1"] += co * np.outer(params.t4[:m], mu_c)
        grads["t2"] += co * np.outer(params.t4[m : 2 * m], mu_s)
        grads["t3"] += co * np.outer(params.t4[2 * m :], mu_v)
        grads["t4"] += co * np.concatenate(
            [params.t1 @ mu_c, params.t2 @ mu_s, params.t3 @ mu_v]
        )
    return loss / B, grads


# ---------------------------------------------------------------------------
# Fitted n-step Q-learning


@dataclass
class _Transition:
    chosen_before: tuple[int, ...]
    action: int
    reward_sum: float
    chosen_after: tuple[int, ...]
    bootstrap: bool
    graph_idx: int


class ReplayMemory:
    """Ring buffer of n-step transitions; oldest evicted first."""

    def __init__(self, capacity: int = DEFAULT_REPLAY_CAPACITY):
        self.capacity = capacity
        self.items: list[_Transition] = []

    def push(self, item: _Transition) -> None:
        self.items.append(item)
        if len(self.items) > self.capacity:
            self.items.pop(0)

    def sample(self, rng: np.random.Generator, batch: int) -> list[_Transition]:
        idx = rng.choice(len(self.items), size=min(batch, len(self.items)), replace=False)
        return [self.items[int(i)] for i in idx]

    def __len__(self) -> int:
        return len(self.items)


def _state_at(ctx: "_GraphContext", chosen: tuple[int, ...]) -> EpisodeState:
    state = EpisodeState(ctx.g, ctx.good, ctx.scores, ctx.sampler)
    for v in chosen:
        state.apply(v)
    return state


@dataclass
class _GraphContext:
    g: Graph
    good: np.ndarray
    scores: np.ndarray
    spec: ObjectiveSpec
    sampler: ImportanceSampler | None = None


def _transition_features(ctx: _GraphContext, tr: _Transition, params: QParams, gamma: float):
    before = _state_at(ctx, tr.chosen_before)
    mu_c, mu_s = before.summaries()
    mu_v = before.features_of(np.array([tr.action]))[0]
    y = tr.reward_sum
    if tr.bootstrap and gamma != 0.0:
        after = _state_at(ctx, tr.chosen_after)
        if after.cand.size:
            mu_c_a, mu_s_a = after.summaries()
            mu_va = after.features_of(after.cand)
            y = tr.reward_sum + gamma * float(np.max(q_values(params, mu_c_a, mu_s_a, mu_va)))
    return (mu_c, mu_s, mu_v), y


def q_train(
    graphs: list[Graph],
    good_per_graph: list[np.ndarray],
    scores_per_graph: list[np.ndarray],
    spec: ObjectiveSpec,
    params0: QParams,
    episodes: int = 10,
    steps: int | None = None,
    n_step: int = DEFAULT_N_STEP,
    gamma: float = DEFAULT_GAMMA,
    lr: float = DEFAULT_Q_LR,
    seed: int = 0,
    replay_capacity: int = DEFAULT_REPLAY_CAPACITY,
    batch_size: int = DEFAULT_BATCH,
    samplers: list[ImportanceSampler] | None = None,
):
    """Fitted n-step Q-learning over the good nodes of training graphs.

    Episode e runs on graph e mod len(graphs).  Per step: epsilon-greedy
    action (epsilon = max(0.05, 0.9^t) on the global step count),
    immediate reward = marginal objective gain; once n rewards exist the
    n-step transition enters replay and one Adam update fits a batch of
    transitions against bootstrapped targets.  Transitions cut short by
    episode end keep their partial reward sum and skip the bootstrap.
    Returns (params, history) with per-update losses.
    """
    if episodes < 1 or n_step < 1:
        raise UsageError("episodes and n_step must be >= 1")
    if not graphs or len(graphs) != len(good_per_graph) or len(graphs) != len(scores_per_graph):
        raise UsageError("need good nodes and scores for every training graph")
    params = params0.copy()
    params.check_shapes()
    contexts = [
        _GraphContext(g, np.unique(good), scores, spec, None if samplers is None else samplers[i])
        for i, (g, good, scores) in enumerate(zip(graphs, good_per_graph, scores_per_graph))
    ]
    if steps is None:
        steps = max(ctx.good.size for ctx in contexts)
    rng = np.random.default_rng(derive_seed(seed, "q-train"))
    adam = Adam(lr)
    memory = ReplayMemory(replay_capacity)
    param_dict = params.as_dict()
    history: list[float] = []
    global_t = 0

    def update() -> None:
        batch = memory.sample(rng, batch_size)
        feats, ys = [], []
        for tr in batch:
            f, y = _transition_features(contexts[tr.graph_idx], tr, params, gamma)
            feats.append(f)
            ys.append(y)
        loss, grads = q_loss_and_grad(params, feats, np.array(ys))
        if not math.isfinite(loss):
            raise NumericError(f"Q training diverged (loss={loss})")
        adam.step(param_dict, grads)
        history.append(loss)

    for ep in range(episodes):
        gi = ep % len(contexts)
        ctx = contexts[gi]
        state = EpisodeState(ctx.g, ctx.good, ctx.scores, ctx.sampler)
        cover = CoverState(ctx.g, spec.kind) if spec.kind in ("mcp", "mvc") else None
        snapshots: list[tuple[int, ...]] = [()]
        actions: list[int] = []
        rewards: list[float] = []
        t_local = 0
        while t_local < steps and state.legal_cand.size:
            t_local += 1
            global_t += 1
            eps = max(EPS_FLOOR, EPS_DECAY**global_t)
            state.refresh_sample()
            if rng.random() < eps:
                v = int(state.legal_cand[int(rng.integers(state.legal_cand.size))])
            else:
                mu_c, mu_s = state.summaries()
                qs = q_values(params, mu_c, mu_s, state.features_of(state.legal_cand))
                v = int(state.legal_cand[int(np.argmax(qs))])
            if cover is not None:
                reward = cover.add(v) / cover.universe
            else:
                reward = marginal_gain(ctx.g, spec, list(state.chosen), v)
            state.apply(v)
            actions.append(v)
            rewards.append(reward)
            snapshots.append(tuple(state.chosen))
            if t_local >= n_step:
                anchor = t_local - n_step  # 0-based index of the anchored action
                memory.push(
                    _Transition(
                        snapshots[anchor],
                        actions[anchor],
                        math.fsum(rewards[anchor : anchor + n_step]),
                        snapshots[t_local],
                        bootstrap=True,
                        graph_idx=gi,
                    )
                )
                update()
        # transitions whose n-step window ran off the episode end
        for anchor in range(max(0, t_local - n_step + 1), t_local):
            memory.push(
                _Transition(
                    snapshots[anchor],
                    actions[anchor],
                    math.fsum(rewards[anchor:]),
                    snapshots[t_local],
                    bootstrap=False,
                    graph_idx=gi,
                )
            )
    return params, history


# ---------------------------------------------------------------------------
# Inference


def prepare_scores(
    g: Graph, gcn_params: GcnParams, good_nodes: np.ndarray, include_neighbors: bool = True
) -> np.ndarray:
    """Dense per-node score array (zero outside the scored set)."""
    nodes, scores = gcn_forward(g, gcn_params, good_nodes, include_neighbors)
    dense = np.zeros(g.node_count)
    dense[nodes] = scores
    return dense


def _good_with_budget_floor(
    g: Graph, noise_model: NoiseCutoffModel | None, b: int, prune: bool
) -> np.ndarray:
    if not prune or noise_model is None:
        return np.arange(g.node_count, dtype=np.int64)
    good = predict_good_nodes(noise_model, g, b / g.node_count)
    if good.size < b:
        log.warning("pruned set (%d) smaller than budget %d; extending by rank", good.size, b)
        ranks = feature_ranks(g)
        order = np.argsort(ranks, kind="stable")
        good = np.unique(np.concatenate([good, order[: min(b, g.node_count)]]))
    return good


def solve(
    g: Graph,
    spec: ObjectiveSpec,
    b: int,
    noise_model: NoiseCutoffModel | None,
    gcn_params: GcnParams,
    q_params: QParams,
    seed: int = 0,
    prune: bool = True,
    locality_eps: float | None = None,
) -> SolveResult:
    """Full inference: prune, score, then b greedy Q-argmax selections.

    ``locality_eps`` switches locality to importance-sampled estimation
    with that error bound; default is exact locality."""
    if b < 1:
        raise UsageError("budget must be >= 1")
    t0 = time.perf_counter()
    scored = _good_with_budget_floor(g, noise_model, b, prune)
    # pruned set is what the GCN scores; actions are its legal subset
    legal = scored[g.side[scored] == 0] if spec.kind == "mcp" and g.side is not None else scored
    b, truncated = _clip_budget(b, legal.shape[0])
    scores = prepare_scores(g, gcn_params, scored, include_neighbors=locality_eps is not None)
    sampler = None
    if locality_eps is not None:
        sampler = make_sampler(g, scored, scores, locality_eps, derive_seed(seed, "solve-is"))
    state = EpisodeState(g, scored, scores, sampler, legal=legal)
    evals = 0
    for _ in range(b):
        state.refresh_sample()
        mu_c, mu_s = state.summaries()
        qs = q_values(q_params, mu_c, mu_s, state.features_of(state.legal_cand))
        evals += state.legal_cand.size
        state.apply(int(state.legal_cand[int(np.argmax(qs))]))
    objective = eval_objective(g, spec, state.chosen)
    return SolveResult(state.chosen, objective, evals, time.perf_counter() - t0, truncated)


def gcn_top_b(
    g: Graph,
    spec: ObjectiveSpec,
    b: int,
    noise_model: NoiseCutoffModel | None,
    gcn_params: GcnParams,
    prune: bool = True,
) -> SolveResult:
    """Ablation: skip Q-learning, take the b highest-scored good nodes."""
    if b < 1:
        raise UsageError("budget must be >= 1")
    t0 = time.perf_counter()
    scored = _good_with_budget_floor(g, noise_model, b, prune)
    cand = scored[g.side[scored] == 0] if spec.kind == "mcp" and g.side is not None else scored
    b, truncated = _clip_budget(b, cand.shape[0])
    scores = prepare_scores(g, gcn_params, scored, include_neighbors=False)
    order = np.lexsort((cand, -scores[cand]))
    solution = [int(cand[i]) for i in order[:b]]
    objective = eval_objective(g, spec, solution)
    return SolveResult(solution, objective, cand.shape[0], time.perf_counter() - t0, truncated)


# ---------------------------------------------------------------------------
# Persistence


def save_q(params: QParams, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"q-v1 {params.m_q}\n")
        for name, mat in (("T1", params.t1), ("T2", params.t2), ("T3", params.t3)):
            for r in range(mat.shape[0]):
                for c in range(mat.shape[1]):
                    fh.write(f"{name} {r} {c} {mat[r, c]:.17g}\n")
        for i, val in enumerate(params.t4):
            fh.write(f"T4 {i} {val:.17g}\n")


def load_q(path: str) -> QParams:
    with open_for_read(path) as fh:
        header = fh.readline().split()
        if len(header) != 2 or header[0] != "q-v1":
            raise DataError(f"{path}: bad Q model header")
        m = int(header[1])
        mats = {"T1": np.zeros((m, 2)), "T2": np.zeros((m, 2)), "T3": np.zeros((m, 2))}
        t4 = np.zeros(3 * m)
        for lineno, line in enumerate(fh, start=2):
            parts = line.split()
            if not parts:
                continue
            if parts[0] in mats and len(parts) == 4:
                mats[parts[0]][int(parts[1]), int(parts[2])] = float(parts[3])
            elif parts[0] == "T4" and len(parts) == 3:
                t4[int(parts[1])] = float(parts[2])
            else:
                raise DataError(f"{path}:{lineno}: unrecognized line {line!r}")
    params = QParams(mats["T1"], mats["T2"], mats["T3"], t4)
    params.check_shapes()
    return params

"""Node-quality predictor: a K-layer mean-pool graph convolution trained
by mean-squared error against probabilistic-greedy scores.

The forward pass is restricted to the K-hop frontier of the nodes being
scored, mirroring test-phase pruning: layer k is computed only for nodes
whose layer-(k+1) consumers exist, so values at the scored nodes are
identical to a whole-graph computation.  Gradients are hand-derived and
checked against finite differences in the test suite.

Scored nodes are the good nodes plus their out-neighbors; the neighbor
scores exist solely to drive importance sampling downstream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, NumericError, UsageError
from .graph import Graph
from .noise import NoiseCutoffModel, predict_good_nodes
from .optim import Adam
from .seeds import derive_seed
from .supervision import NodeScoreTable
from .util import open_for_read, ragged_arcs

DEFAULT_DEPTH = 2
DEFAULT_DIM = 60
DEFAULT_DROPOUT = 0.1
DEFAULT_LR = 1e-3
DEFAULT_STEPS = 1000


@dataclass
class GcnParams:
    """Layer matrices W[k] ((dim, 2) then (dim, 2*dim)) plus the scoring
    vector; layer inputs are Concat(mean of neighbor states, own state)."""

    W: list[np.ndarray]
    w: np.ndarray
    dropout_rate: float = DEFAULT_DROPOUT

    @property
    def depth(self) -> int:
        return len(self.W)

    @property
    def dim(self) -> int:
        return self.w.shape[0]

    def check_shapes(self) -> None:
        d = self.dim
        want = 2
        for k, Wk in enumerate(self.W):
            if Wk.shape != (d, want):
                raise UsageError(f"layer {k} weight shape {Wk.shape}, expected {(d, want)}")
            want = 2 * d

    def copy(self) -> "GcnParams":
        return GcnParams([Wk.copy() for Wk in self.W], self.w.copy(), self.dropout_rate)

    def as_dict(self) -> dict[str, np.ndarray]:
        out = {f"W{k}": Wk for k, Wk in enumerate(self.W)}
        out["w"] = self.w
        return out


def init_gcn_params(
    depth: int = DEFAULT_DEPTH,
    dim: int = DEFAULT_DIM,
    seed: int = 0,
    dropout_rate: float = DEFAULT_DROPOUT,
) -> GcnParams:
    rng = np.random.default_rng(seed)

    def glorot(rows, cols):
        bound = math.sqrt(6.0 / (rows + cols))
        return rng.uniform(-bound, bound, size=(rows, cols))

    W = [glorot(dim, 2)]
    for _ in range(1, depth):
        W.append(glorot(dim, 2 * dim))
    w = glorot(1, dim)[0]
    return GcnParams(W, w, dropout_rate)


# ---------------------------------------------------------------------------
# Frontier structure


@dataclass
class BatchStructure:
    """Message-passing index structure for one (graph, scored nodes) pair.

    frontiers[k] holds the sorted node ids whose layer-k state is needed;
    frontiers[depth] is the scored set itself and each earlier frontier
    adds the out-neighbors of the next one.
    """

    g: Graph
    frontiers: list[np.ndarray]
    layers: list[dict]
    score_nodes: np.ndarray
    h0: np.ndarray = field(repr=False)


def _expand(g: Graph, nodes: np.ndarray) -> np.ndarray:
    arcs, _ = ragged_arcs(g.indptr, nodes)
    return np.union1d(nodes, g.nbr[arcs])


def build_structure(
    g: Graph, good_nodes: np.ndarray, depth: int, include_neighbors: bool = True
) -> BatchStructure:
    """``include_neighbors`` widens the scored set to the 1-hop
    out-neighborhood, which importance sampling needs; exact-locality
    inference can skip it."""
    good_nodes = np.unique(np.asarray(good_nodes, dtype=np.int64))
    if good_nodes.size == 0:
        raise UsageError("no nodes to score")
    score_nodes = _expand(g, good_nodes) if include_neighbors else good_nodes
    frontiers = [None] * (depth + 1)
    frontiers[depth] = score_nodes
    for k in range(depth, 0, -1):
        frontiers[k - 1] = _expand(g, frontiers[k])
    layers = []
    for k in range(1, depth + 1):
        nodes = frontiers[k]
        prev = frontiers[k - 1]
        arcs, counts = ragged_arcs(g.indptr, nodes)
        tgt_pos = np.searchsorted(prev, g.nbr[arcs])
        self_pos = np.searchsorted(prev, nodes)
        # reverse index: arcs grouped by target row for the backward scatter
        order = np.argsort(tgt_pos, kind="stable")
        sorted_tgt = tgt_pos[order]
        group_tgt, group_off = np.unique(sorted_tgt, return_index=True)
        offsets = np.zeros(counts.shape[0], dtype=np.int64)
        np.cumsum(counts[:-1], out=offsets[1:])
        layers.append(
            dict(
                counts=counts,
                offsets=offsets,
                tgt_pos=tgt_pos,
                self_pos=self_pos,
                order=order,
                group_tgt=group_tgt,
                group_off=group_off,
            )
        )
    x = g.out_weight_sum
    xmax = float(x.max()) if x.size else 0.0
    h0 = (x / xmax if xmax > 0 else np.zeros_like(x))[frontiers[0]].reshape(-1, 1)
    return BatchStructure(g, frontiers, layers, score_nodes, h0)


def _segment_mean(values: np.ndarray, counts: np.ndarray, offsets: np.ndarray) -> np.ndarray:
    padded = np.vstack([values, np.zeros((1, values.shape[1]))])
    sums = np.add.reduceat(padded, offsets, axis=0) if counts.size else padded[:0]
    sums[counts == 0] = 0.0
    return sums / np.maximum(counts, 1)[:, None]


def _forward(
    params: GcnParams, struct: BatchStructure, masks: list[np.ndarray] | None = None
):
    """Returns (scores over score_nodes, cache for backward)."""
    keep = 1.0 - params.dropout_rate
    H = [struct.h0]
    cache = []
    for k, lay in enumerate(struct.layers):
        prev = H[-1]
        A = _segment_mean(prev[lay["tgt_pos"]], lay["counts"], lay["offsets"])
        X = np.hstack([A, prev[lay["self_pos"]]])
        Z = X @ params.W[k].T
        R = np.maximum(Z, 0.0)
        if masks is not None:
            Hk = R * masks[k] / keep
        else:
            Hk = R
        H.append(Hk)
        cache.append((X, Z))
    scores = H[-1] @ params.w
    return scores, (H, cache)


def _backward(
    params: GcnParams,
    struct: BatchStructure,
    fwd_cache,
    d_scores: np.ndarray,
    masks: list[np.ndarray] | None = None,
) -> dict[str, np.ndarray]:
    keep = 1.0 - params.dropout_rate
    H, cache = fwd_cache
    grads: dict[str, np.ndarray] = {"w": H[-1].T @ d_scores}
    gH = np.outer(d_scores, params.w)
    for k in range(len(struct.layers) - 1, -1, -1):
        lay = struct.layers[k]
        X, Z = cache[k]
        dR = gH * masks[k] / keep if masks is not None else gH
        dZ = dR * (Z > 0.0)
        grads[f"W{k}"] = dZ.T @ X
        dX = dZ @ params.W[k]
        d = H[k].shape[1]
        dA, dSelf = dX[:, :d], dX[:, d:]
        gH = np.zeros_like(H[k])
        gH[lay["self_pos"]] += dSelf
        if lay["tgt_pos"].size:
            per_arc = np.repeat(dA / np.maximum(lay["counts"], 1)[:, None], lay["counts"], axis=0)
            sorted_contrib = per_arc[lay["order"]]
            sums = np.add.reduceat(sorted_contrib, lay["group_off"], axis=0)
            gH[lay["group_tgt"]] += sums
    return grads


def gcn_forward(
    g: Graph, params: GcnParams, good_nodes: np.ndarray, include_neighbors: bool = True
):
    """Inference scores.

    Returns (score_nodes, scores): the good nodes (plus their
    out-neighbors unless disabled) in ascending id order and their
    predicted quality.  Deterministic: dropout is inactive outside
    training.
    """
    params.check_shapes()
    struct = build_structure(g, good_nodes, params.depth, include_neighbors)
    scores, _ = _forward(params, struct)
    return struct.score_nodes, scores


def gcn_loss(
    params: GcnParams,
    struct: BatchStructure,
    good_rows: np.ndarray,
    targets: np.ndarray,
    masks: list[np.ndarray] | None = None,
    with_grad: bool = True,
):
    """Mean squared error over the good nodes, plus parameter gradients."""
    scores, fwd_cache = _forward(params, struct, masks)
    resid = scores[good_rows] - targets
    loss = float(resid @ resid) / good_rows.shape[0]
    if not with_grad:
        return loss, None
    d_scores = np.zeros_like(scores)
    d_scores[good_rows] = 2.0 * resid / good_rows.shape[0]
    return loss, _backward(params, struct, fwd_cache, d_scores, masks)


def _draw_masks(rng: np.random.Generator, params: GcnParams, struct: BatchStructure):
    if params.dropout_rate <= 0.0:
        return None
    keep = 1.0 - params.dropout_rate
    return [
        (rng.random((f.shape[0], params.dim)) < keep).astype(np.float64)
        for f in struct.frontiers[1:]
    ]


def gcn_train(
    train_graphs: list[Graph],
    train_tables: list[NodeScoreTable],
    noise_model: NoiseCutoffModel,
    params0: GcnParams,
    steps: int = DEFAULT_STEPS,
    lr: float = DEFAULT_LR,
    seed: int = 0,
    val_graphs: list[Graph] | None = None,
    val_tables: list[NodeScoreTable] | None = None,
    val_every: int = 10,
):
    """Train by sampling (graph, budget) pairs; keep the best-validation
    parameters.

    Each step draws a training graph uniformly and a normalized budget
    uniform on (0, that graph's largest trace length], prunes to the good
    nodes, and Adam-steps the squared-error loss on them.  Returns
    (params, history) where history maps 'train'/'val' to (step, loss)
    pairs.
    """
    if steps < 1:
        raise UsageError("steps must be >= 1")
    if len(train_graphs) != len(train_tables) or not train_graphs:
        raise UsageError("need one score table per training graph")
    params = params0.copy()
    params.check_shapes()
    rng = np.random.default_rng(derive_seed(seed, "gcn-train"))
    adam = Adam(lr)
    # frontier structures are budget-independent supersets: good nodes at
    # any budget are a subset of the good nodes at b_max (cutoff monotone)
    structs = []
    for g, table in zip(train_graphs, train_tables):
        good_max = predict_good_nodes(noise_model, g, table.b_max_norm)
        structs.append(build_structure(g, good_max, params.depth))
    if val_graphs is None:
        val_graphs, val_tables = train_graphs, train_tables
    val_structs = []
    for g, table in zip(val_graphs, val_tables):
        good_max = predict_good_nodes(noise_model, g, table.b_max_norm)
        val_structs.append((build_structure(g, good_max, params.depth), table))

    def val_loss(p: GcnParams) -> float:
        total = 0.0
        for struct, table in val_structs:
            good = predict_good_nodes(noise_model, struct.g, table.b_max_norm)
            rows = np.searchsorted(struct.score_nodes, good)
            loss, _ = gcn_loss(p, struct, rows, table.scores[good], with_grad=False)
            total += loss
        return total / len(val_structs)

    history: dict[str, list[tuple[int, float]]] = {"train": [], "val": []}
    best = params.copy()
    best_val = math.inf
    param_dict = params.as_dict()
    for step in range(1, steps + 1):
        gi = int(rng.integers(len(train_graphs)))
        g, table, struct = train_graphs[gi], train_tables[gi], structs[gi]
        b = float(rng.uniform(0.0, table.b_max_norm)) or table.b_max_norm
        good = predict_good_nodes(noise_model, g, b)
        rows = np.searchsorted(struct.score_nodes, good)
        masks = _draw_masks(rng, params, struct)
        loss, grads = gcn_loss(params, struct, rows, table.scores[good], masks)
        if not math.isfinite(loss):
            raise NumericError(f"GCN training diverged at step {step} (loss={loss})")
        adam.step(param_dict, grads)
        history["train"].append((step, loss))
        if step % val_every == 0 or step == steps:
            vl = val_loss(params)
            history["val"].append((step, vl))
            if vl < best_val:
                best_val = vl
                best = params.copy()
    return best, history


# ---------------------------------------------------------------------------
# Persistence


def save_gcn(params: GcnParams, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"gcn-v1 {params.depth} {params.dim}\n")
        for k, Wk in enumerate(params.W):
            for r in range(Wk.shape[0]):
                for c in range(Wk.shape[1]):
                    fh.write(f"W {k} {r} {c} {Wk[r, c]:.17g}\n")
        for i, val in enumerate(params.w):
            fh.write(f"w {i} {val:.17g}\n")


def load_gcn(path: str) -> GcnParams:
    with open_for_read(path) as fh:
        header = fh.readline().split()
        if len(header) != 3 or header[0] != "gcn-v1":
            raise DataError(f"{path}: bad GCN model header")
        depth, dim = int(header[1]), int(header[2])
        W = [np.zeros((dim, 2))] + [np.zeros((dim, 2 * dim)) for _ in range(depth - 1)]
        w = np.zeros(dim)
        for lineno, line in enumerate(fh, start=2):
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "W" and len(parts) == 5:
                W[int(parts[1])][int(parts[2]), int(parts[3])] = float(parts[4])
            elif parts[0] == "w" and len(parts) == 3:
                w[int(parts[1])] = float(parts[2])
            else:
                raise DataError(f"{path}:{lineno}: unrecognized line {line!r}")
    params = GcnParams(W, w)
    params.check_shapes()
    return params

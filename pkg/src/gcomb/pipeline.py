"""End-to-end orchestration: label generation, noise fitting, GCN and Q
training, model persistence, and the benchmark harness.

This is the layer the HTTP service and CLI call into; everything here is
plain functions over the core modules so library users can script the
same flows.
"""

from __future__ import annotations

import math
import os
import time
from dataclasses import dataclass, field

import numpy as np

from .baselines import CSV_HEADER, SolveResult, celf, exact_mcp, greedy, stochastic_greedy
from .errors import UsageError
from .gcn import (
    DEFAULT_DEPTH,
    DEFAULT_DIM,
    DEFAULT_DROPOUT,
    DEFAULT_LR,
    DEFAULT_STEPS,
    GcnParams,
    gcn_train,
    init_gcn_params,
    load_gcn,
    save_gcn,
)
from .graph import SIDE_A, Graph
from .noise import NoiseCutoffModel, fit_noise, load_noise, save_noise
from .objectives import ObjectiveSpec
from .qlearn import (
    DEFAULT_GAMMA,
    DEFAULT_MQ,
    DEFAULT_N_STEP,
    DEFAULT_Q_LR,
    QParams,
    gcn_top_b,
    init_q_params,
    load_q,
    prepare_scores,
    predict_good_nodes,
    q_train,
    save_q,
    solve,
)
from .seeds import derive_seed
from .supervision import DEFAULT_DELTA, DEFAULT_RUNS, build_scores, sample_traces

METHODS = ("gcomb", "gcn-top-b", "greedy", "celf", "sg", "exact")

NOISE_FILE = "noise.txt"
GCN_FILE = "gcn.txt"
Q_FILE = "q.txt"
REPORT_FILE = "train_report.txt"


@dataclass
class TrainConfig:
    objective: str = "mcp"
    mc_sims: int = 1000
    m_runs: int = DEFAULT_RUNS
    delta: float = DEFAULT_DELTA
    gcn_depth: int = DEFAULT_DEPTH
    gcn_dim: int = DEFAULT_DIM
    gcn_steps: int = DEFAULT_STEPS
    gcn_lr: float = DEFAULT_LR
    dropout: float = DEFAULT_DROPOUT
    q_dim: int = DEFAULT_MQ
    q_episodes: int = 10
    q_steps: int | None = None
    n_step: int = DEFAULT_N_STEP
    gamma: float = DEFAULT_GAMMA
    q_lr: float = DEFAULT_Q_LR
    seed: int = 0


@dataclass
class TrainedModels:
    noise: NoiseCutoffModel
    gcn: GcnParams
    q: QParams


@dataclass
class TrainReport:
    phase_seconds: dict[str, float]
    total_seconds: float
    gcn_history: dict[str, list[tuple[int, float]]]
    q_history: list[float]
    trace_counts: list[int] = field(default_factory=list)


def objective_spec(cfg: TrainConfig) -> ObjectiveSpec:
    return ObjectiveSpec(cfg.objective, mc_sims=cfg.mc_sims, rng_seed=derive_seed(cfg.seed, "obj"))


def train_pipeline(
    graphs: list[Graph], graph_ids: list[str], cfg: TrainConfig
) -> tuple[TrainedModels, TrainReport]:
    """Run the full training pipeline on the given graphs.

    Graphs are split half/half into train and validation (first half
    trains, matching the fixed split used throughout); the noise model
    and both networks are fitted on the training half, and the returned
    GCN carries the best validation loss seen.
    """
    if not graphs:
        raise UsageError("need at least one training graph")
    if len(graph_ids) != len(graphs):
        raise UsageError("need one id per training graph")
    spec = objective_spec(cfg)
    phases: dict[str, float] = {}
    t_total = time.perf_counter()

    t0 = time.perf_counter()
    traces = [
        sample_traces(g, spec, cfg.m_runs, cfg.delta, derive_seed(cfg.seed, "labels", gid), gid)
        for g, gid in zip(graphs, graph_ids)
    ]
    tables = [build_scores(tr) for tr in traces]
    phases["labels"] = time.perf_counter() - t0

    n_train = math.ceil(len(graphs) / 2)
    tr_graphs, tr_tables, tr_traces = graphs[:n_train], tables[:n_train], traces[:n_train]
    val_graphs, val_tables = graphs[n_train:], tables[n_train:]
    if not val_graphs:
        val_graphs, val_tables = tr_graphs, tr_tables

    t0 = time.perf_counter()
    noise = fit_noise(tr_graphs, tr_traces)
    phases["noise"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    gcn0 = init_gcn_params(cfg.gcn_depth, cfg.gcn_dim, derive_seed(cfg.seed, "gcn-init"), cfg.dropout)
    gcn_params, gcn_history = gcn_train(
        tr_graphs,
        tr_tables,
        noise,
        gcn0,
        steps=cfg.gcn_steps,
        lr=cfg.gcn_lr,
        seed=derive_seed(cfg.seed, "gcn"),
        val_graphs=val_graphs,
        val_tables=val_tables,
    )
    phases["gcn"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    goods, scores = [], []
    for g, table in zip(tr_graphs, tr_tables):
        good = predict_good_nodes(noise, g, table.b_max_norm)
        if spec.kind == "mcp" and g.side is not None:
            good = good[g.side[good] == SIDE_A]
        goods.append(good)
        scores.append(prepare_scores(g, gcn_params, good))
    q0 = init_q_params(cfg.q_dim, derive_seed(cfg.seed, "q-init"))
    q_params, q_history = q_train(
        tr_graphs,
        goods,
        scores,
        spec,
        q0,
        episodes=cfg.q_episodes,
        steps=cfg.q_steps,
        n_step=cfg.n_step,
        gamma=cfg.gamma,
        lr=cfg.q_lr,
        seed=derive_seed(cfg.seed, "q"),
    )
    phases["qlearn"] = time.perf_counter() - t0

    report = TrainReport(
        phases,
        time.perf_counter() - t_total,
        gcn_history,
        q_history,
        [len(tr) for tr in traces],
    )
    return TrainedModels(noise, gcn_params, q_params), report


def save_models(models: TrainedModels, out_dir: str) -> dict[str, str]:
    os.makedirs(out_dir, exist_ok=True)
    paths = {
        "noise": os.path.join(out_dir, NOISE_FILE),
        "gcn": os.path.join(out_dir, GCN_FILE),
        "q": os.path.join(out_dir, Q_FILE),
    }
    save_noise(models.noise, paths["noise"])
    save_gcn(models.gcn, paths["gcn"])
    save_q(models.q, paths["q"])
    return paths


def load_models(model_dir: str) -> TrainedModels:
    return TrainedModels(
        load_noise(os.path.join(model_dir, NOISE_FILE)),
        load_gcn(os.path.join(model_dir, GCN_FILE)),
        load_q(os.path.join(model_dir, Q_FILE)),
    )


def write_report(report: TrainReport, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for name, secs in report.phase_seconds.items():
            fh.write(f"phase {name} {secs:.17g}\n")
        fh.write(f"total {report.total_seconds:.17g}\n")
        for step, loss in report.gcn_history["train"]:
            fh.write(f"gcn_loss {step} {loss:.17g}\n")
        for step, loss in report.gcn_history["val"]:
            fh.write(f"gcn_val_loss {step} {loss:.17g}\n")
        for i, loss in enumerate(report.q_history):
            fh.write(f"q_loss {i} {loss:.17g}\n")


# ---------------------------------------------------------------------------
# Benchmark harness


@dataclass
class BenchRow:
    method: str
    dataset: str
    objective: str
    b: int
    value: float | str
    evals: int
    seconds: float

    def to_csv(self) -> str:
        value = self.value if isinstance(self.value, str) else f"{self.value:.17g}"
        return f"{self.method},{self.dataset},{self.objective},{self.b},{value},{self.evals},{self.seconds:.17g}"


def _run_method(
    method: str,
    g: Graph,
    spec: ObjectiveSpec,
    b: int,
    seed: int,
    models: TrainedModels | None,
    sg_epsilon: float,
    prune: bool,
) -> SolveResult | str:
    if method == "greedy":
        return greedy(g, spec, b)
    if method == "celf":
        return celf(g, spec, b)
    if method == "sg":
        return stochastic_greedy(g, spec, b, sg_epsilon, seed)
    if method == "exact":
        if spec.kind != "mcp":
            return "refused"
        try:
            return exact_mcp(g, b)
        except UsageError:
            return "refused"
    if models is None:
        raise UsageError(f"method {method!r} needs trained models")
    if method == "gcomb":
        return solve(g, spec, b, models.noise, models.gcn, models.q, seed, prune=prune)
    if method == "gcn-top-b":
        return gcn_top_b(g, spec, b, models.noise, models.gcn, prune=prune)
    raise UsageError(f"unknown method {method!r}; choose from {METHODS}")


def bench(
    graphs: list[Graph],
    dataset_names: list[str],
    spec: ObjectiveSpec,
    methods: list[str],
    budgets: list[int],
    seeds: list[int],
    models: TrainedModels | None = None,
    sg_epsilon: float = 0.05,
    prune: bool = True,
) -> list[BenchRow]:
    """Run every (method, dataset, budget, seed) cell and return rows in
    deterministic sorted order.  Oversized exact instances yield a row
    marked `refused` instead of failing the whole run."""
    for m in methods:
        if m not in METHODS:
            raise UsageError(f"unknown method {m!r}; choose from {METHODS}")
    rows: list[BenchRow] = []
    for method in methods:
        for g, name in zip(graphs, dataset_names):
            for b in budgets:
                for seed in seeds:
                    res = _run_method(method, g, spec, b, seed, models, sg_epsilon, prune)
                    if isinstance(res, str):
                        rows.append(BenchRow(method, name, spec.kind, b, res, 0, 0.0))
                    else:
                        rows.append(
                            BenchRow(method, name, spec.kind, b, res.objective, res.evals, res.wall_time)
                        )
    rows.sort(key=lambda r: (r.method, r.dataset, r.b))
    return rows


def rows_to_csv(rows: list[BenchRow]) -> str:
    return "\n".join([CSV_HEADER] + [r.to_csv() for r in rows]) + "\n"

"""FastAPI service wrapping the pipeline.

Paths in requests are interpreted on the server's filesystem; the CLI
runs the app in-process by default so those are the local paths.  Errors
surface as HTTP 400 with a structured code (usage | data | numeric) that
clients map onto exit codes.
"""

from __future__ import annotations

import os

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..errors import DataError, GcombError, NumericError, UsageError
from ..graph import (
    Graph,
    WeightModel,
    assign_weights,
    gen_ba,
    gen_bp,
    load_edge_list,
    to_bipartite,
    write_edge_list,
)
from ..objectives import ObjectiveSpec
from ..pipeline import (
    REPORT_FILE,
    BenchRow,
    TrainConfig,
    bench,
    load_models,
    rows_to_csv,
    save_models,
    train_pipeline,
    write_report,
)
from ..seeds import derive_seed
from ..qlearn import solve
from . import schemas


def _error_code(exc: GcombError) -> str:
    if isinstance(exc, NumericError):
        return "numeric"
    if isinstance(exc, DataError):
        return "data"
    return "usage"


def _load_graph(path: str, directed: bool, objective: str = "") -> Graph:
    g = load_edge_list(path, directed)
    # MCP on a general graph: work on the standard two-copy conversion
    if objective == "mcp" and not g.bipartite:
        g = to_bipartite(g)
    return g


def _dataset_name(path: str) -> str:
    return os.path.splitext(os.path.basename(path))[0]


def create_app() -> FastAPI:
    app = FastAPI(title="gcomb", version=__version__)

    @app.exception_handler(GcombError)
    def gcomb_error_handler(request: Request, exc: GcombError):
        return JSONResponse(
            status_code=400,
            content={"error": {"code": _error_code(exc), "message": str(exc)}},
        )

    @app.get("/health", response_model=schemas.HealthResponse)
    def health():
        return {"status": "ok", "version": __version__}

    @app.post("/gen", response_model=schemas.GenResponse)
    def gen(req: schemas.GenRequest):
        if req.kind == "bp":
            if req.p is None:
                raise UsageError("bp generator needs an edge probability p")
            g = gen_bp(req.n, req.p, req.seed)
        elif req.kind == "ba":
            g = gen_ba(req.n, req.m_attach, req.seed)
        else:
            raise UsageError(f"unknown generator kind {req.kind!r} (bp or ba)")
        if req.weights is not None:
            g = assign_weights(g, WeightModel(req.weights.variant, req.weights.seed))
        write_edge_list(g, req.out_path)
        return {"path": req.out_path, "nodes": g.node_count, "edges": g.edge_count}

    @app.post("/train", response_model=schemas.TrainResponse)
    def train(req: schemas.TrainRequest):
        graphs = [_load_graph(p, req.directed, req.objective.kind) for p in req.graph_paths]
        ids = [_dataset_name(p) for p in req.graph_paths]
        cfg = TrainConfig(
            objective=req.objective.kind,
            mc_sims=req.objective.mc_sims,
            m_runs=req.m_runs,
            delta=req.delta,
            gcn_depth=req.gcn_depth,
            gcn_dim=req.gcn_dim,
            gcn_steps=req.gcn_steps,
            gcn_lr=req.gcn_lr,
            dropout=req.dropout,
            q_dim=req.q_dim,
            q_episodes=req.q_episodes,
            q_steps=req.q_steps,
            n_step=req.n_step,
            gamma=req.gamma,
            q_lr=req.q_lr,
            seed=req.seed,
        )
        models, report = train_pipeline(graphs, ids, cfg)
        paths = save_models(models, req.out_dir)
        report_path = os.path.join(req.out_dir, REPORT_FILE)
        write_report(report, report_path)
        return {
            "noise_path": paths["noise"],
            "gcn_path": paths["gcn"],
            "q_path": paths["q"],
            "report_path": report_path,
            "phase_seconds": report.phase_seconds,
            "total_seconds": report.total_seconds,
        }

    @app.post("/solve", response_model=schemas.SolveResponse)
    def solve_endpoint(req: schemas.SolveRequest):
        g = _load_graph(req.graph_path, req.directed, req.objective.kind)
        models = load_models(req.model_dir)
        spec = ObjectiveSpec(
            req.objective.kind, mc_sims=req.objective.mc_sims, rng_seed=derive_seed(req.seed, "obj")
        )
        res = solve(g, spec, req.budget, models.noise, models.gcn, models.q, req.seed, prune=req.prune)
        name = _dataset_name(req.graph_path)
        row = BenchRow(
            "gcomb", name, spec.kind, req.budget, res.objective, res.evals, res.wall_time
        )
        solution_path = None
        if req.out_csv:
            with open(req.out_csv, "w", encoding="utf-8") as fh:
                fh.write(rows_to_csv([row]))
            solution_path = req.out_csv + ".solution"
            with open(solution_path, "w", encoding="utf-8") as fh:
                fh.writelines(f"{v}\n" for v in res.solution)
        return {
            "solution": res.solution,
            "value": res.objective,
            "evals": res.evals,
            "seconds": res.wall_time,
            "csv_row": row.to_csv(),
            "solution_path": solution_path,
        }

    @app.post("/bench", response_model=schemas.BenchResponse)
    def bench_endpoint(req: schemas.BenchRequest):
        graphs = [_load_graph(p, req.directed, req.objective.kind) for p in req.graph_paths]
        names = [_dataset_name(p) for p in req.graph_paths]
        spec = ObjectiveSpec(req.objective.kind, mc_sims=req.objective.mc_sims)
        models = load_models(req.model_dir) if req.model_dir else None
        rows = bench(
            graphs,
            names,
            spec,
            req.methods,
            req.budgets,
            req.seeds,
            models,
            req.sg_epsilon,
            req.prune,
        )
        csv_path = None
        if req.out_csv:
            with open(req.out_csv, "w", encoding="utf-8") as fh:
                fh.write(rows_to_csv(rows))
            csv_path = req.out_csv
        return {"rows": [r.__dict__ for r in rows], "csv_path": csv_path}

    return app

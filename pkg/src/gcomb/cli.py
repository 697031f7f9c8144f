"""Command-line client for the gcomb service.

By default every command spins the service up in-process and talks to it
over an ASGI transport, so no server needs to be running; point --server
at a URL to drive a remote instance instead.  Exit codes: 0 ok, 2 usage
error, 3 data error, 4 numeric failure.
"""

from __future__ import annotations

import asyncio
import sys

import click
import httpx

EXIT_CODES = {"usage": 2, "data": 3, "numeric": 4}


def _load_config(path: str) -> dict:
    """Line-oriented 'key value' config; keys match option names."""
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, value = line.partition(" ")
            out[key.strip().replace("-", "_")] = value.strip()
    return out


def _request(server: str, path: str, payload: dict) -> dict:
    if server:
        try:
            with httpx.Client(base_url=server, timeout=None) as client:
                resp = client.post(path, json=payload)
        except httpx.HTTPError as exc:
            click.echo(f"error: cannot reach {server}: {exc}", err=True)
            sys.exit(3)
    else:
        from .service import create_app

        async def go():
            transport = httpx.ASGITransport(app=create_app())
            async with httpx.AsyncClient(transport=transport, base_url="http://gcomb") as client:
                return await client.post(path, json=payload)

        resp = asyncio.run(go())
    if resp.status_code == 200:
        return resp.json()
    if resp.status_code == 422:
        click.echo(f"error: invalid request: {resp.text}", err=True)
        sys.exit(2)
    try:
        err = resp.json()["error"]
        click.echo(f"error: {err['message']}", err=True)
        sys.exit(EXIT_CODES.get(err.get("code", "usage"), 2))
    except (KeyError, ValueError):
        click.echo(f"error: service returned {resp.status_code}: {resp.text}", err=True)
        sys.exit(3)


@click.group()
@click.option("--server", default="", help="Service URL; empty runs the service in-process.")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help="Line-oriented 'key value' defaults file; flags win.")
@click.pass_context
def main(ctx, server, config_path):
    """Budget-constrained graph coverage and influence pipeline."""
    ctx.ensure_object(dict)
    ctx.obj["server"] = server
    if config_path:
        cfg = _load_config(config_path)
        ctx.default_map = {
            "train": cfg,
            "solve": cfg,
            "bench": cfg,
            "serve": cfg,
            "gen": {"bp": cfg, "ba": cfg},
        }


@main.group()
def gen():
    """Generate synthetic graphs."""


def _gen_common(ctx, payload):
    out = _request(ctx.obj["server"], "/gen", payload)
    click.echo(f"wrote {out['path']}: {out['nodes']} nodes, {out['edges']} edges")


@gen.command("bp")
@click.option("--n", type=int, required=True, help="Total node count (20% land on side A).")
@click.option("--p", type=float, required=True, help="A-B edge probability.")
@click.option("--seed", type=int, default=0)
@click.option("--out", required=True)
@click.pass_context
def gen_bp_cmd(ctx, n, p, seed, out):
    """Random bipartite graph."""
    _gen_common(ctx, {"kind": "bp", "n": n, "p": p, "seed": seed, "out_path": out})


@gen.command("ba")
@click.option("--n", type=int, required=True)
@click.option("--m", type=int, default=4, help="Edges per new node.")
@click.option("--seed", type=int, default=0)
@click.option("--out", required=True)
@click.option("--weights", type=click.Choice(["unit", "constant", "trivalency"]), default="unit")
@click.option("--weight-seed", type=int, default=0)
@click.pass_context
def gen_ba_cmd(ctx, n, m, seed, out, weights, weight_seed):
    """Preferential-attachment graph."""
    _gen_common(
        ctx,
        {
            "kind": "ba",
            "n": n,
            "m_attach": m,
            "seed": seed,
            "out_path": out,
            "weights": {"variant": weights, "seed": weight_seed},
        },
    )


_objective_opt = click.option(
    "--objective", type=click.Choice(["mcp", "mvc", "im"]), default="mcp"
)


@main.command()
@click.option("--graph", "graphs", multiple=True, required=True, help="Training edge lists.")
@click.option("--out-dir", required=True)
@_objective_opt
@click.option("--undirected", is_flag=True, default=False)
@click.option("--seed", type=int, default=0)
@click.option("--mc-sims", type=int, default=1000)
@click.option("--m-runs", type=int, default=30)
@click.option("--delta", type=float, default=0.01)
@click.option("--gcn-depth", type=int, default=2)
@click.option("--gcn-dim", type=int, default=60)
@click.option("--gcn-steps", type=int, default=1000)
@click.option("--gcn-lr", type=float, default=1e-3)
@click.option("--dropout", type=float, default=0.1)
@click.option("--q-dim", type=int, default=32)
@click.option("--q-episodes", type=int, default=10)
@click.option("--q-steps", type=int, default=None)
@click.option("--n-step", type=int, default=2)
@click.option("--gamma", type=float, default=0.8)
@click.option("--q-lr", type=float, default=5e-4)
@click.pass_context
def train(ctx, graphs, out_dir, objective, undirected, seed, mc_sims, m_runs, delta,
          gcn_depth, gcn_dim, gcn_steps, gcn_lr, dropout, q_dim, q_episodes, q_steps,
          n_step, gamma, q_lr):
    """Train noise, GCN and Q models; write them plus a training report."""
    payload = {
        "graph_paths": list(graphs),
        "out_dir": out_dir,
        "directed": not undirected,
        "objective": {"kind": objective, "mc_sims": mc_sims},
        "seed": seed,
        "m_runs": m_runs,
        "delta": delta,
        "gcn_depth": gcn_depth,
        "gcn_dim": gcn_dim,
        "gcn_steps": gcn_steps,
        "gcn_lr": gcn_lr,
        "dropout": dropout,
        "q_dim": q_dim,
        "q_episodes": q_episodes,
        "q_steps": q_steps,
        "n_step": n_step,
        "gamma": gamma,
        "q_lr": q_lr,
    }
    out = _request(ctx.obj["server"], "/train", payload)
    for phase, secs in out["phase_seconds"].items():
        click.echo(f"phase {phase}: {secs:.2f}s")
    click.echo(f"total: {out['total_seconds']:.2f}s")
    click.echo(f"models: {out['noise_path']} {out['gcn_path']} {out['q_path']}")
    click.echo(f"report: {out['report_path']}")


@main.command()
@click.option("--graph", required=True)
@click.option("--models", required=True)
@click.option("--budget", type=int, required=True)
@_objective_opt
@click.option("--undirected", is_flag=True, default=False)
@click.option("--seed", type=int, default=0)
@click.option("--mc-sims", type=int, default=10000, help="Simulations for the reported IM spread.")
@click.option("--no-prune", is_flag=True, default=False)
@click.option("--out", "out_csv", default=None, help="CSV destination; solution goes next to it.")
@click.pass_context
def solve(ctx, graph, models, budget, objective, undirected, seed, mc_sims, no_prune, out_csv):
    """Solve one instance with the trained pipeline."""
    payload = {
        "graph_path": graph,
        "model_dir": models,
        "budget": budget,
        "directed": not undirected,
        "objective": {"kind": objective, "mc_sims": mc_sims},
        "seed": seed,
        "prune": not no_prune,
        "out_csv": out_csv,
    }
    out = _request(ctx.obj["server"], "/solve", payload)
    click.echo(out["csv_row"])
    if out.get("solution_path"):
        click.echo(f"solution: {out['solution_path']}")


@main.command()
@click.option("--graph", "graphs", multiple=True, required=True)
@click.option("--methods", default="greedy", help="Comma list: gcomb,gcn-top-b,greedy,celf,sg,exact.")
@click.option("--budgets", required=True, help="Comma list of budgets.")
@click.option("--seeds", default="0", help="Comma list of seeds.")
@_objective_opt
@click.option("--undirected", is_flag=True, default=False)
@click.option("--mc-sims", type=int, default=10000)
@click.option("--models", default=None)
@click.option("--epsilon", type=float, default=0.05, help="Stochastic-greedy accuracy.")
@click.option("--no-prune", is_flag=True, default=False, help="Disable noise pruning (ablation).")
@click.option("--out", "out_csv", default=None)
@click.pass_context
def bench(ctx, graphs, methods, budgets, seeds, objective, undirected, mc_sims, models,
          epsilon, no_prune, out_csv):
    """Compare methods across datasets, budgets and seeds."""
    try:
        budget_list = [int(x) for x in budgets.split(",") if x]
        seed_list = [int(x) for x in seeds.split(",") if x]
    except ValueError as exc:
        raise click.UsageError(f"bad integer list: {exc}")
    payload = {
        "graph_paths": list(graphs),
        "methods": [m.strip() for m in methods.split(",") if m.strip()],
        "budgets": budget_list,
        "seeds": seed_list,
        "directed": not undirected,
        "objective": {"kind": objective, "mc_sims": mc_sims},
        "model_dir": models,
        "sg_epsilon": epsilon,
        "prune": not no_prune,
        "out_csv": out_csv,
    }
    out = _request(ctx.obj["server"], "/bench", payload)
    click.echo("method,dataset,objective,b,value,evals,seconds")
    for r in out["rows"]:
        value = r["value"] if isinstance(r["value"], str) else f"{r['value']:.17g}"
        click.echo(
            f"{r['method']},{r['dataset']},{r['objective']},{r['b']},"
            f"{value},{r['evals']},{r['seconds']:.17g}"
        )
    if out.get("csv_path"):
        click.echo(f"csv: {out['csv_path']}", err=True)


@main.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8000)
def serve(host, port):
    """Run the HTTP service."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=host, port=port)


if __name__ == "__main__":
    main()

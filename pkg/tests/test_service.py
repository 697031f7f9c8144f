import numpy as np
import pytest
from fastapi.testclient import TestClient

from gcomb.graph import load_edge_list
from gcomb.pipeline import load_models
from gcomb.service import create_app


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app())


@pytest.fixture(scope="module")
def tiny_setup(client, tmp_path_factory):
    """Two tiny training graphs, one test graph, and trained models."""
    root = tmp_path_factory.mktemp("svc")
    paths = []
    for s in (1, 2):
        p = str(root / f"train{s}.txt")
        r = client.post("/gen", json={"kind": "bp", "n": 120, "p": 0.15, "seed": s, "out_path": p})
        assert r.status_code == 200
        paths.append(p)
    test_path = str(root / "test.txt")
    client.post("/gen", json={"kind": "bp", "n": 150, "p": 0.15, "seed": 9, "out_path": test_path})
    out_dir = str(root / "models")
    r = client.post(
        "/train",
        json={
            "graph_paths": paths,
            "out_dir": out_dir,
            "seed": 3,
            "m_runs": 6,
            "gcn_steps": 30,
            "gcn_dim": 8,
            "q_episodes": 2,
        },
    )
    assert r.status_code == 200, r.text
    return {"root": root, "train": paths, "test": test_path, "models": out_dir, "train_resp": r.json()}


def test_health(client):
    r = client.get("/health")
    assert r.status_code == 200
    assert r.json()["status"] == "ok"


def test_gen_writes_loadable_file(client, tmp_path):
    p = str(tmp_path / "g.txt")
    r = client.post("/gen", json={"kind": "bp", "n": 50, "p": 0.2, "seed": 4, "out_path": p})
    body = r.json()
    g = load_edge_list(p)
    assert g.node_count == body["nodes"] == 50
    assert g.edge_count == body["edges"]
    assert g.bipartite  # side marker survives the round trip


def test_gen_ba_exact_edge_count(client, tmp_path):
    p = str(tmp_path / "ba.txt")
    r = client.post("/gen", json={"kind": "ba", "n": 200, "m_attach": 4, "seed": 0, "out_path": p})
    assert r.json()["edges"] == 4 * (200 - 4)


def test_gen_rejects_bad_params(client, tmp_path):
    r = client.post(
        "/gen", json={"kind": "bp", "n": 50, "p": 1.5, "seed": 0, "out_path": str(tmp_path / "x")}
    )
    assert r.status_code == 400
    assert r.json()["error"]["code"] == "usage"
    r = client.post("/gen", json={"kind": "xx", "n": 50, "out_path": str(tmp_path / "x")})
    assert r.status_code == 400


def test_train_writes_models_and_report(tiny_setup):
    resp = tiny_setup["train_resp"]
    models = load_models(tiny_setup["models"])
    assert models.noise.knots
    assert models.gcn.dim == 8
    assert models.q.param_count == 9 * 32
    phases = resp["phase_seconds"]
    assert set(phases) == {"labels", "noise", "gcn", "qlearn"}
    assert sum(phases.values()) <= resp["total_seconds"]
    assert sum(phases.values()) >= 0.99 * resp["total_seconds"]


def test_train_deterministic_model_files(client, tiny_setup, tmp_path):
    out2 = str(tmp_path / "models2")
    r = client.post(
        "/train",
        json={
            "graph_paths": tiny_setup["train"],
            "out_dir": out2,
            "seed": 3,
            "m_runs": 6,
            "gcn_steps": 30,
            "gcn_dim": 8,
            "q_episodes": 2,
        },
    )
    assert r.status_code == 200
    for name in ("noise.txt", "gcn.txt", "q.txt"):
        a = open(f"{tiny_setup['models']}/{name}", "rb").read()
        b = open(f"{out2}/{name}", "rb").read()
        assert a == b, f"{name} differs across identical seeded runs"


def test_solve_endpoint(client, tiny_setup, tmp_path):
    out_csv = str(tmp_path / "res.csv")
    r = client.post(
        "/solve",
        json={
            "graph_path": tiny_setup["test"],
            "model_dir": tiny_setup["models"],
            "budget": 4,
            "seed": 0,
            "out_csv": out_csv,
        },
    )
    body = r.json()
    assert r.status_code == 200, r.text
    assert len(body["solution"]) == 4
    assert 0.0 < body["value"] <= 1.0
    lines = open(out_csv).read().splitlines()
    assert lines[0] == "method,dataset,objective,b,value,evals,seconds"
    assert lines[1].startswith("gcomb,test,mcp,4,")
    sol = [int(x) for x in open(body["solution_path"]).read().split()]
    assert sol == body["solution"]


def test_solve_missing_models_is_data_error(client, tiny_setup, tmp_path):
    r = client.post(
        "/solve",
        json={
            "graph_path": tiny_setup["test"],
            "model_dir": str(tmp_path / "nope"),
            "budget": 3,
        },
    )
    assert r.status_code == 400
    assert r.json()["error"]["code"] == "data"


def test_solve_value_matches_recomputation(client, tiny_setup):
    r = client.post(
        "/solve",
        json={"graph_path": tiny_setup["test"], "model_dir": tiny_setup["models"], "budget": 5},
    )
    body = r.json()
    from gcomb.objectives import ObjectiveSpec, eval_objective

    g = load_edge_list(tiny_setup["test"])
    assert eval_objective(g, ObjectiveSpec("mcp"), body["solution"]) == body["value"]


def test_bench_greedy_celf_agree(client, tiny_setup, tmp_path):
    out_csv = str(tmp_path / "bench.csv")
    r = client.post(
        "/bench",
        json={
            "graph_paths": [tiny_setup["test"]],
            "methods": ["greedy", "celf", "gcomb", "gcn-top-b"],
            "budgets": [3, 5],
            "model_dir": tiny_setup["models"],
            "out_csv": out_csv,
        },
    )
    assert r.status_code == 200, r.text
    rows = r.json()["rows"]
    by_key = {(r["method"], r["b"]): r["value"] for r in rows}
    assert by_key[("greedy", 3)] == by_key[("celf", 3)]
    assert by_key[("greedy", 5)] == by_key[("celf", 5)]
    text = open(out_csv).read()
    assert text.startswith("method,dataset,objective,b,value,evals,seconds\n")


def test_bench_exact_refusal_marked(client, tmp_path):
    p = str(tmp_path / "big.txt")
    client.post("/gen", json={"kind": "bp", "n": 1200, "p": 0.05, "seed": 1, "out_path": p})
    r = client.post(
        "/bench",
        json={"graph_paths": [p], "methods": ["exact"], "budgets": [3]},
    )
    rows = r.json()["rows"]
    assert rows[0]["value"] == "refused"


def test_bench_unknown_method_rejected(client, tiny_setup):
    r = client.post(
        "/bench",
        json={"graph_paths": [tiny_setup["test"]], "methods": ["magic"], "budgets": [2]},
    )
    assert r.status_code == 400
    assert r.json()["error"]["code"] == "usage"


def test_bench_mcp_on_general_graph_converts(client, tmp_path):
    p = str(tmp_path / "ba.txt")
    client.post("/gen", json={"kind": "ba", "n": 60, "m_attach": 2, "seed": 2, "out_path": p})
    r = client.post(
        "/bench",
        json={"graph_paths": [p], "methods": ["greedy"], "budgets": [3], "directed": False},
    )
    assert r.status_code == 200, r.text
    assert 0.0 < r.json()["rows"][0]["value"] <= 1.0

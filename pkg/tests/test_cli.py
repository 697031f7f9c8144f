import os

import pytest
from click.testing import CliRunner

from gcomb.cli import main


@pytest.fixture()
def runner():
    return CliRunner()


def test_gen_bp_prints_counts(runner, tmp_path):
    out = str(tmp_path / "g.txt")
    res = runner.invoke(main, ["gen", "bp", "--n", "100", "--p", "0.2", "--seed", "1", "--out", out])
    assert res.exit_code == 0, res.output
    assert "100 nodes" in res.output
    assert os.path.exists(out)


def test_gen_ba_edge_count(runner, tmp_path):
    out = str(tmp_path / "ba.txt")
    res = runner.invoke(main, ["gen", "ba", "--n", "1000", "--m", "4", "--out", out])
    assert res.exit_code == 0, res.output
    assert f"{4 * (1000 - 4)} edges" in res.output


def test_gen_invalid_probability_exits_2(runner, tmp_path):
    res = runner.invoke(
        main, ["gen", "bp", "--n", "50", "--p", "1.5", "--seed", "1", "--out", str(tmp_path / "x")]
    )
    assert res.exit_code == 2


def test_missing_graph_file_exits_3(runner):
    res = runner.invoke(
        main, ["bench", "--graph", "/nonexistent.txt", "--methods", "greedy", "--budgets", "2"]
    )
    assert res.exit_code == 3


def test_bench_gcomb_without_models_exits_2(runner, tmp_path):
    out = str(tmp_path / "g.txt")
    runner.invoke(main, ["gen", "bp", "--n", "60", "--p", "0.2", "--seed", "1", "--out", out])
    res = runner.invoke(main, ["bench", "--graph", out, "--methods", "gcomb", "--budgets", "2"])
    assert res.exit_code == 2


def test_full_pipeline_roundtrip(runner, tmp_path):
    train1 = str(tmp_path / "t1.txt")
    train2 = str(tmp_path / "t2.txt")
    test_g = str(tmp_path / "test.txt")
    models = str(tmp_path / "models")
    for path, seed in ((train1, 1), (train2, 2), (test_g, 7)):
        r = runner.invoke(main, ["gen", "bp", "--n", "100", "--p", "0.15", "--seed", str(seed), "--out", path])
        assert r.exit_code == 0
    r = runner.invoke(
        main,
        ["train", "--graph", train1, "--graph", train2, "--out-dir", models,
         "--m-runs", "5", "--gcn-steps", "20", "--gcn-dim", "8", "--q-episodes", "2", "--seed", "4"],
    )
    assert r.exit_code == 0, r.output
    assert "phase labels" in r.output
    out_csv = str(tmp_path / "res.csv")
    r = runner.invoke(
        main,
        ["solve", "--graph", test_g, "--models", models, "--budget", "3", "--out", out_csv],
    )
    assert r.exit_code == 0, r.output
    assert r.output.startswith("gcomb,test,mcp,3,")
    assert os.path.exists(out_csv)
    assert os.path.exists(out_csv + ".solution")
    r = runner.invoke(
        main,
        ["bench", "--graph", test_g, "--models", models, "--budgets", "2,3",
         "--methods", "greedy,celf,gcomb", "--out", str(tmp_path / "bench.csv")],
    )
    assert r.exit_code == 0, r.output
    lines = [l for l in r.output.splitlines() if l]
    assert lines[0] == "method,dataset,objective,b,value,evals,seconds"
    assert len([l for l in lines if l.startswith("greedy,")]) == 2


def test_config_file_supplies_defaults(runner, tmp_path):
    cfg = tmp_path / "conf.txt"
    out = str(tmp_path / "g.txt")
    cfg.write_text(f"n 80\np 0.2\nout {out}\n")
    res = runner.invoke(main, ["--config", str(cfg), "gen", "bp", "--seed", "3"])
    assert res.exit_code == 0, res.output
    assert "80 nodes" in res.output


def test_config_file_flags_win(runner, tmp_path):
    cfg = tmp_path / "conf.txt"
    out = str(tmp_path / "g.txt")
    cfg.write_text(f"n 80\np 0.2\nout {out}\n")
    res = runner.invoke(main, ["--config", str(cfg), "gen", "bp", "--n", "40", "--seed", "3"])
    assert res.exit_code == 0, res.output
    assert "40 nodes" in res.output


def test_bad_budget_list_exits_2(runner, tmp_path):
    out = str(tmp_path / "g.txt")
    runner.invoke(main, ["gen", "bp", "--n", "60", "--p", "0.2", "--seed", "1", "--out", out])
    res = runner.invoke(main, ["bench", "--graph", out, "--methods", "greedy", "--budgets", "2;3"])
    assert res.exit_code == 2

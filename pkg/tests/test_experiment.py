import numpy as np
import pytest

from diteration.experiment import (GAIN_HEADER, SWEEP_HEADER, ExperimentPlan, PlanError,
                                   gain_table, load_plan, parse_plan, read_csv, run_sweep,
                                   speedup_table, write_csv)
from diteration.graph import Graph, write_edge_list
from diteration.sim import SimConfig, run
from diteration.solver import SolverConfig, solve_single
from diteration.synthetic import web_sample


def test_parse_plan_lists_and_defaults():
    plan = parse_plan("""
        # comment line
        graph = synthetic
        n = 500
        n = 1000   # trailing comment
        k = 1
        k = 4
        strategy = cb
        delay_proba = 0.2
        jobs = 2
    """)
    assert plan.graph == "synthetic"
    assert plan.n == [500, 1000] and plan.k == [1, 4]
    assert plan.strategy == ["cb"] and plan.delay_proba == [0.2] and plan.seed == [0]
    assert plan.jobs == 2 and plan.output == "."
    assert len(list(plan.combinations())) == 4


@pytest.mark.parametrize("text,message", [
    ("n = 10\nk = 1", "graph"),
    ("graph = g\nk = 1", "'n'"),
    ("graph = g\nn = x\nk = 1", "line 2"),
    ("graph = g\nn = 10\nk = 1\ncolour = red", "unknown key"),
    ("graph = g\ngraph = h\nn = 1\nk = 1", "twice"),
    ("graph = g\nn = 10\nk = 1\nstrategy = spectral", "unknown strategies"),
    ("graph g", "line 1"),
])
def test_parse_plan_errors(text, message):
    with pytest.raises(PlanError, match=message):
        parse_plan(text)


def test_load_plan_output_relative_to_file(tmp_path):
    (tmp_path / "plan.txt").write_text("graph = synthetic\nn = 10\nk = 1\noutput = out\n")
    assert load_plan(tmp_path / "plan.txt").output == str(tmp_path / "out")


def _plan(tmp_path, **kw):
    base = dict(graph="synthetic", n=[1000], k=[1, 2, 4], strategy=["uniform", "cb"],
                output=str(tmp_path))
    base.update(kw)
    return ExperimentPlan(**base)


def test_sweep_rows_and_speedup(tmp_path):
    rows = run_sweep(_plan(tmp_path))
    assert [(r["k"], r["strategy"]) for r in rows] == [
        (1, "uniform"), (1, "cb"), (2, "uniform"), (2, "cb"), (4, "uniform"), (4, "cb")]
    single = solve_single(web_sample(1000), SolverConfig()).normalized_cost
    for r in rows[:2]:
        assert float(r["cost"]) == pytest.approx(single, rel=0.01)
    on_disk = read_csv(tmp_path / "sweep.csv")
    assert list(on_disk[0]) == SWEEP_HEADER
    speed = read_csv(tmp_path / "speedup.csv")
    assert [s["speedup"] for s in speed if s["k"] == "1"] == ["1", "1"]


def test_sweep_skips_impossible_combinations(tmp_path):
    g = Graph.from_edges(3, [0, 1, 2], [1, 2, 0])
    path = tmp_path / "g.txt"
    write_edge_list(g, path)
    rows = run_sweep(ExperimentPlan(graph=str(path), n=[3], k=[2, 4], strategy=["uniform", "adaptive"],
                                    output=str(tmp_path)))
    status = {(r["k"], r["strategy"]): r["cost"] for r in rows}
    assert status[(4, "uniform")] == "skipped"
    assert status[(4, "adaptive")] == "skipped"
    assert float(status[(2, "uniform")]) > 0
    assert float(status[(2, "adaptive")]) > 0


def test_sweep_records_failures(tmp_path, monkeypatch):
    import diteration.experiment as ex

    def boom(*args, **kwargs):
        raise RuntimeError("boom")

    monkeypatch.setattr(ex, "run", boom)
    rows = run_sweep(_plan(tmp_path, k=[1, 2], strategy=["uniform"]))
    assert [r["cost"] for r in rows] == ["failed", "failed"]


def test_gain_examples():
    rows = [
        {"n": 10, "k": 2, "strategy": "uniform", "delay_proba": "0", "seed": 0, "cost": "3"},
        {"n": 10, "k": 2, "strategy": "cb", "delay_proba": "0", "seed": 0, "cost": "3"},
        {"n": 10, "k": 4, "strategy": "uniform", "delay_proba": "0", "seed": 0, "cost": "2.5"},
        {"n": 10, "k": 4, "strategy": "cb", "delay_proba": "0", "seed": 0, "cost": "1.0"},
        {"n": 10, "k": 8, "strategy": "uniform", "delay_proba": "0", "seed": 0, "cost": "1.0"},
    ]
    gains = gain_table(rows)
    assert [(g["k"], g["gain_pct"]) for g in gains] == [("2", "0"), ("4", "150")]
    assert list(gains[0]) == GAIN_HEADER


def test_speedup_unity_at_k1():
    rows = [{"n": 5, "k": 1, "strategy": "uniform", "delay_proba": "0", "seed": 0, "cost": "7.3"},
            {"n": 5, "k": 2, "strategy": "uniform", "delay_proba": "0", "seed": 0, "cost": "failed"}]
    assert [r["speedup"] for r in speedup_table(rows)] == ["1"]


def test_cb_gain_on_skewed_graph():
    """Half the nodes carry 90% of the links; CB should beat uniform at K=2."""
    rng = np.random.default_rng(0)
    n = 2000
    deg = np.r_[np.full(n // 2, 18), np.full(n // 2, 2)]
    src = np.repeat(np.arange(n), deg)
    dst = rng.integers(0, n, size=src.size)
    g = Graph.from_edges(n, src, dst)
    heavy = g.out_degree[: n // 2].sum() / g.edge_count
    assert heavy == pytest.approx(0.9, abs=0.01)
    rows = []
    for strategy in ("uniform", "cb"):
        res = run(g, SimConfig(k=2, strategy=strategy))
        rows.append({"n": n, "k": 2, "strategy": strategy, "delay_proba": "0", "seed": 0,
                     "cost": repr(res.converged_at)})
    (gain,) = gain_table(rows)
    assert float(gain["gain_pct"]) > 0


def test_sweep_is_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    plan = dict(k=[1, 4], strategy=["uniform"], delay_proba=[0.0, 0.4], seed=[1, 2])
    run_sweep(_plan(a, **plan))
    run_sweep(_plan(b, **plan, jobs=2))
    for name in ("sweep.csv", "speedup.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_write_csv_roundtrip(tmp_path):
    write_csv(tmp_path / "x.csv", ["a", "b"], [{"a": 1, "b": "x", "c": 9}])
    assert (tmp_path / "x.csv").read_text() == "a,b\n1,x\n"

import subprocess
import sys

import numpy as np
import pytest

from diteration.cli import main
from diteration.experiment import read_csv
from diteration.graph import load_edge_list, write_edge_list
from diteration.oracle import power_iteration
from diteration.synthetic import web_sample


@pytest.fixture(scope="module")
def graph_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("g") / "g.txt"
    write_edge_list(web_sample(300), path)
    return path


def test_graph_stats(graph_file, capsys):
    assert main(["graph", "stats", "--graph", str(graph_file)]) == 0
    header, row = capsys.readouterr().out.splitlines()
    assert header == "n,edges,avg_degree,dangling,dangling_pct"
    assert row.split(",")[0] == "300"


def test_graph_synth_roundtrip(tmp_path, capsys):
    out = tmp_path / "s.txt.gz"
    assert main(["graph", "synth", "--n", "200", "--out", str(out), "--seed", "3"]) == 0
    assert load_edge_list(out).n == 200


def test_partition(graph_file, capsys):
    assert main(["partition", "--graph", str(graph_file), "--k", "3"]) == 0
    assert capsys.readouterr().out.splitlines() == ["part,start,end", "0,0,100", "1,100,200", "2,200,300"]
    assert main(["partition", "--graph", str(graph_file), "--k", "3", "--strategy", "cb"]) == 0
    assert capsys.readouterr().out.splitlines()[0] == "part,start,end"


def test_solve_and_oracle(graph_file, tmp_path, capsys):
    scores = tmp_path / "scores.csv"
    assert main(["solve", "--graph", str(graph_file), "--target-error", "1e-10", "--out", str(scores)]) == 0
    assert capsys.readouterr().out.startswith("normalized_cost,")
    ref = tmp_path / "ref.csv"
    assert main(["oracle", "--graph", str(graph_file), "--method", "dense", "--out", str(ref)]) == 0
    assert capsys.readouterr().out.startswith("power_iterations,")
    a = np.array([float(r["score"]) for r in read_csv(scores)])
    b = np.array([float(r["score"]) for r in read_csv(ref)])
    assert list(read_csv(scores)[0]) == ["node", "score"]
    assert np.abs(a - b).sum() <= 1e-10
    assert np.abs(b - power_iteration(load_edge_list(graph_file))).sum() <= 1e-12


def test_sim_trace(graph_file, tmp_path, capsys):
    trace = tmp_path / "trace.csv"
    code = main(["sim", "--graph", str(graph_file), "--k", "4", "--strategy", "cb", "--delay-proba", "0.3",
                 "--seed", "2", "--trace", str(trace)])
    assert code == 0
    header, row = capsys.readouterr().out.splitlines()
    assert header == "cost,idle_global,steps,converged"
    cost = row.split(",")[0]
    lines = trace.read_text().splitlines()
    assert lines[0] == "step,pid,norm_cost,bound,s_k,idle_frac"
    assert lines[-1].startswith(f"TOTAL,{cost},")
    assert {ln.split(",")[1] for ln in lines[1:-1]} == {"0", "1", "2", "3", "all"}


def test_sim_abort_exit_code(graph_file, capsys):
    assert main(["sim", "--graph", str(graph_file), "--k", "2", "--max-steps", "1"]) == 2


def test_sim_explicit_pid_speed(graph_file, capsys):
    assert main(["sim", "--graph", str(graph_file), "--k", "2", "--pid-speed", "50"]) == 0


def test_sweep_and_gain(tmp_path, capsys):
    plan = tmp_path / "plan.txt"
    plan.write_text("graph = synthetic\nn = 400\nk = 1\nk = 2\nstrategy = uniform\nstrategy = cb\n"
                    "output = res\n")
    assert main(["sweep", str(plan)]) == 0
    sweep = tmp_path / "res" / "sweep.csv"
    assert len(read_csv(sweep)) == 4
    gain = tmp_path / "gain.csv"
    assert main(["gain", str(sweep), "--out", str(gain)]) == 0
    assert [r["k"] for r in read_csv(gain)] == ["1", "2"]


def test_bad_input_returns_error(tmp_path, capsys):
    bad = tmp_path / "bad.txt"
    bad.write_text("0 1\nx y\n")
    assert main(["graph", "stats", "--graph", str(bad)]) == 1
    assert "line 2" in capsys.readouterr().err


def test_help_lists_subcommands():
    out = subprocess.run([sys.executable, "-m", "diteration", "--help"], capture_output=True, text=True)
    assert out.returncode == 0
    for cmd in ("graph", "partition", "solve", "oracle", "sim", "sweep", "gain"):
        assert cmd in out.stdout

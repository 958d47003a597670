"""Command-line entry point: ``diteration <command> ...``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import experiment, oracle
from .graph import stats, write_edge_list
from .partition import cost_balanced_partition, uniform_partition
from .sim import SimConfig, SimulationAborted, run
from .solver import SolverConfig, solve_single
from .synthetic import synthetic_web_graph


def _add_graph_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--graph", required=True,
                   help="edge-list file ('src dst' per line, gzip allowed) or 'synthetic'")
    p.add_argument("--max-node", type=int, default=None,
                   help="keep the subgraph induced by the first N nodes")
    p.add_argument("--graph-seed", type=int, default=0, help="seed for --graph synthetic")


def _add_solver_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--damping", type=float, default=0.85)
    p.add_argument("--alpha", type=float, default=1.5, help="threshold decay factor (> 1)")
    p.add_argument("--target-error", type=float, default=None, help="L1 target (default 1/N)")
    p.add_argument("--selection", choices=("weighted", "raw"), default="weighted")


def _graph(args):
    return experiment.load_graph(args.graph, args.max_node, args.graph_seed)


def _write_scores(path: str, h: np.ndarray) -> None:
    with open(path, "w") as fh:
        fh.write("node,score\n")
        for i, x in enumerate(h.tolist()):
            fh.write(f"{i},{x:.17g}\n")


def cmd_graph_stats(args) -> int:
    s = stats(_graph(args))
    print(s.csv_header())
    print(s.csv_row())
    return 0


def cmd_graph_synth(args) -> int:
    g = synthetic_web_graph(args.n, args.mean_degree, dangling_fraction=args.dangling_fraction,
                            skew=args.skew, locality=args.locality, seed=args.seed)
    write_edge_list(g, args.out)
    return 0


def cmd_partition(args) -> int:
    g = _graph(args)
    p = uniform_partition(g.n, args.k) if args.strategy == "uniform" else cost_balanced_partition(g, args.k)
    sys.stdout.write(p.csv())
    return 0


def cmd_solve(args) -> int:
    g = _graph(args)
    cfg = SolverConfig(damping=args.damping, alpha=args.alpha, target_error=args.target_error,
                       selection=args.selection)
    res = solve_single(g, cfg)
    _write_scores(args.out, res.h)
    print(f"normalized_cost,{res.normalized_cost:.9g}")
    return 0


def cmd_oracle(args) -> int:
    g = _graph(args)
    if args.method == "dense":
        x = oracle.dense_solve(g, args.damping)
    else:
        x = oracle.power_iteration(g, args.damping, tol=args.tol)
    _write_scores(args.out, x)
    eps = args.target_error if args.target_error is not None else 1.0 / g.n
    print(f"power_iterations,{oracle.power_iteration_cost(g, args.damping, eps)}")
    return 0


def cmd_sim(args) -> int:
    g = _graph(args)
    speed = None if args.pid_speed.upper() == "AUTO" else int(args.pid_speed)
    scfg = SolverConfig(damping=args.damping, alpha=args.alpha, selection=args.selection)
    cfg = SimConfig(k=args.k, pid_speed=speed, delay_proba=args.delay_proba, strategy=args.strategy,
                    target_error=args.target_error, seed=args.seed, solver=scfg,
                    max_steps=args.max_steps, adapt_interval=args.adapt_interval,
                    record_trace=args.trace is not None)
    code = 0
    try:
        res = run(g, cfg)
    except SimulationAborted as exc:
        print(f"aborted: {exc}", file=sys.stderr)
        res, code = exc.result, 2
    if args.trace:
        lines = res.trace.csv_lines(res.converged_at, res.idle_global)
        Path(args.trace).write_text("\n".join(lines) + "\n")
    if args.out:
        _write_scores(args.out, res.h)
    print("cost,idle_global,steps,converged")
    print(f"{res.converged_at:.9g},{res.idle_global:.9g},{res.steps},{int(res.converged)}")
    return code


def cmd_sweep(args) -> int:
    plan = experiment.load_plan(args.plan)
    if args.jobs is not None:
        plan.jobs = args.jobs
    if args.output is not None:
        plan.output = args.output
    rows = experiment.run_sweep(plan)
    failed = sum(r["cost"] == "failed" for r in rows)
    print(f"{len(rows)} rows written to {Path(plan.output) / 'sweep.csv'} ({failed} failed)")
    return 0


def cmd_gain(args) -> int:
    rows = experiment.gain_table(experiment.read_csv(args.sweep))
    experiment.write_csv(args.out, experiment.GAIN_HEADER, rows)
    print(f"{len(rows)} rows written to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="diteration",
                                     description="D-iteration PageRank solver and distributed simulator")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    graph = sub.add_parser("graph", help="graph utilities")
    gsub = graph.add_subparsers(dest="graph_command", required=True)
    p = gsub.add_parser("stats", help="print n,edges,avg_degree,dangling,dangling_pct")
    _add_graph_args(p)
    p.set_defaults(func=cmd_graph_stats)
    p = gsub.add_parser("synth", help="write a seeded synthetic web-like edge list")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--mean-degree", type=float, default=12.0)
    p.add_argument("--dangling-fraction", type=float, default=0.03)
    p.add_argument("--skew", type=float, default=0.6)
    p.add_argument("--locality", type=float, default=0.9)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_graph_synth)

    p = sub.add_parser("partition", help="print partition boundaries as CSV")
    _add_graph_args(p)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--strategy", choices=("uniform", "cb"), default="uniform")
    p.set_defaults(func=cmd_partition)

    p = sub.add_parser("solve", help="single-PID D-iteration")
    _add_graph_args(p)
    _add_solver_args(p)
    p.add_argument("--out", default="scores.csv", help="node,score CSV")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("oracle", help="reference solution (power iteration or dense)")
    _add_graph_args(p)
    _add_solver_args(p)
    p.add_argument("--method", choices=("power", "dense"), default="power")
    p.add_argument("--tol", type=float, default=1e-14, help="successive-iterate L1 tolerance")
    p.add_argument("--out", default="oracle.csv", help="node,score CSV")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("sim", help="simulate K asynchronous PIDs")
    _add_graph_args(p)
    _add_solver_args(p)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--strategy", choices=("uniform", "cb", "adaptive"), default="uniform")
    p.add_argument("--delay-proba", type=float, default=0.0)
    p.add_argument("--pid-speed", default="AUTO", help="operations per step, or AUTO for L/K")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-steps", type=int, default=1_000_000)
    p.add_argument("--adapt-interval", type=int, default=1)
    p.add_argument("--trace", default=None, help="write step,pid,norm_cost,bound,s_k,idle_frac CSV")
    p.add_argument("--out", default=None, help="optional node,score CSV of the result")
    p.set_defaults(func=cmd_sim)

    p = sub.add_parser("sweep", help="run an experiment plan")
    p.add_argument("plan")
    p.add_argument("--jobs", type=int, default=None)
    p.add_argument("--output", default=None, help="override the plan's output directory")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("gain", help="CB-over-uniform gains from a sweep.csv")
    p.add_argument("sweep")
    p.add_argument("--out", default="gain.csv")
    p.set_defaults(func=cmd_gain)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

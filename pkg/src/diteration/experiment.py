"""Parameter sweeps over (N, K, strategy, delay) and CB-versus-uniform gains.

A plan is a flat ``key = value`` file; list-valued keys are repeated::

    graph = data/uk-2007-05.txt.gz    # or: synthetic
    n = 1000
    n = 100000
    k = 1
    k = 2
    strategy = uniform
    strategy = cb
    delay_proba = 0
    seed = 0
    output = results/
"""
from __future__ import annotations

import csv
import io
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .graph import Graph, load_edge_list
from .sim import STRATEGIES, SimConfig, SimulationAborted, run
from .synthetic import web_sample

log = logging.getLogger(__name__)

SWEEP_HEADER = ["n", "k", "strategy", "delay_proba", "seed", "cost", "idle_global"]
GAIN_HEADER = ["n", "k", "delay_proba", "seed", "cost_uniform", "cost_cb", "gain_pct"]
SPEEDUP_HEADER = ["n", "k", "strategy", "delay_proba", "seed", "speedup"]

_LIST_KEYS = {"n": int, "k": int, "strategy": str, "delay_proba": float, "seed": int}
_SCALAR_KEYS = {"graph": str, "output": str, "target_error": float, "graph_seed": int,
                "damping": float, "alpha": float, "selection": str, "jobs": int}


class PlanError(ValueError):
    pass


@dataclass
class ExperimentPlan:
    graph: str
    n: list[int]
    k: list[int]
    strategy: list[str] = field(default_factory=lambda: ["uniform"])
    delay_proba: list[float] = field(default_factory=lambda: [0.0])
    seed: list[int] = field(default_factory=lambda: [0])
    output: str = "."
    target_error: Optional[float] = None  # None means 1/N per truncation
    graph_seed: int = 0
    damping: float = 0.85
    alpha: float = 1.5
    selection: str = "weighted"
    jobs: int = 1

    def __post_init__(self):
        for name in _LIST_KEYS:
            if not getattr(self, name):
                raise PlanError(f"plan needs at least one '{name}'")
        bad = set(self.strategy) - set(STRATEGIES)
        if bad:
            raise PlanError(f"unknown strategies {sorted(bad)}")

    def combinations(self):
        for n in self.n:
            for k in self.k:
                for strategy in self.strategy:
                    for p in self.delay_proba:
                        for seed in self.seed:
                            yield n, k, strategy, p, seed


def parse_plan(text: str) -> ExperimentPlan:
    values: dict = {key: [] for key in _LIST_KEYS}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise PlanError(f"line {lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        try:
            if key in _LIST_KEYS:
                values[key].append(_LIST_KEYS[key](value))
            elif key in _SCALAR_KEYS:
                if key in values:
                    raise PlanError(f"line {lineno}: '{key}' given twice")
                values[key] = _SCALAR_KEYS[key](value)
            else:
                raise PlanError(f"line {lineno}: unknown key '{key}'")
        except ValueError as exc:
            if isinstance(exc, PlanError):
                raise
            raise PlanError(f"line {lineno}: bad value for '{key}': {value!r}") from None
    if "graph" not in values:
        raise PlanError("plan needs 'graph'")
    for key, default in (("strategy", ["uniform"]), ("delay_proba", [0.0]), ("seed", [0])):
        values[key] = values[key] or default
    return ExperimentPlan(**values)


def load_plan(path) -> ExperimentPlan:
    plan = parse_plan(Path(path).read_text())
    out = Path(plan.output)
    if not out.is_absolute():
        plan.output = str(Path(path).parent / out)
    return plan


def load_graph(source: str, n: Optional[int] = None, graph_seed: int = 0) -> Graph:
    """Edge-list path, or ``synthetic`` for the seeded web-like stand-in."""
    if source == "synthetic":
        if n is None:
            raise PlanError("synthetic graphs need an explicit n")
        return web_sample(n, seed=graph_seed)
    return load_edge_list(source, max_node=n)


def _fmt(x: float) -> str:
    return f"{x:.9g}"


def _run_one(g: Graph, plan: ExperimentPlan, k: int, strategy: str, p: float, seed: int) -> dict:
    from .solver import SolverConfig

    scfg = SolverConfig(damping=plan.damping, alpha=plan.alpha, selection=plan.selection)
    cfg = SimConfig(k=k, strategy=strategy, delay_proba=p, seed=seed, solver=scfg,
                    target_error=plan.target_error, record_trace=False)
    try:
        res = run(g, cfg)
        return {"cost": _fmt(res.converged_at), "idle_global": _fmt(res.idle_global)}
    except SimulationAborted as exc:
        log.warning("n=%d k=%d %s p=%g seed=%d aborted: %s", g.n, k, strategy, p, seed, exc)
        return {"cost": "failed", "idle_global": ""}
    except Exception as exc:  # noqa: BLE001 - a failed combination must not stop the sweep
        log.warning("n=%d k=%d %s p=%g seed=%d failed: %s", g.n, k, strategy, p, seed, exc)
        return {"cost": "failed", "idle_global": ""}


def run_sweep(plan: ExperimentPlan, write: bool = True) -> list[dict]:
    """Run every plan combination; rows come back in plan order."""
    rows: list[dict] = []
    for n in plan.n:
        g = load_graph(plan.graph, n, plan.graph_seed)
        combos = [c for c in plan.combinations() if c[0] == n]
        tasks = []
        for _, k, strategy, p, seed in combos:
            row = {"n": n, "k": k, "strategy": strategy, "delay_proba": _fmt(p), "seed": seed}
            reason = None
            if k > g.n:
                reason = f"k={k} exceeds n={g.n}"
            elif strategy == "adaptive" and k != 2:
                reason = "adaptive strategy needs k=2"
            if reason:
                log.info("skipping n=%d k=%d %s: %s", n, k, strategy, reason)
                row.update(cost="skipped", idle_global="")
            tasks.append((row, reason is None, (k, strategy, p, seed)))
        todo = [t for t in tasks if t[1]]
        if plan.jobs > 1 and len(todo) > 1:
            with ProcessPoolExecutor(max_workers=plan.jobs) as pool:
                futures = [pool.submit(_run_one, g, plan, *args) for _, _, args in todo]
                results = [f.result() for f in futures]
        else:
            results = [_run_one(g, plan, *args) for _, _, args in todo]
        it = iter(results)
        for row, live, _ in tasks:
            if live:
                row.update(next(it))
            rows.append(row)
    if write:
        out = Path(plan.output)
        out.mkdir(parents=True, exist_ok=True)
        write_csv(out / "sweep.csv", SWEEP_HEADER, rows)
        speed = speedup_table(rows)
        if speed:
            write_csv(out / "speedup.csv", SPEEDUP_HEADER, speed)
    return rows


def _cost(row: dict) -> Optional[float]:
    try:
        return float(row["cost"])
    except (TypeError, ValueError):
        return None


def speedup_table(rows: list[dict]) -> list[dict]:
    """cost(K=1) / cost(K) for rows sharing (n, strategy, delay, seed)."""
    base = {}
    for r in rows:
        if int(r["k"]) == 1 and _cost(r) is not None:
            base[(r["n"], r["strategy"], r["delay_proba"], r["seed"])] = _cost(r)
    out = []
    for r in rows:
        key = (r["n"], r["strategy"], r["delay_proba"], r["seed"])
        c = _cost(r)
        if key in base and c:
            out.append({"n": r["n"], "k": r["k"], "strategy": r["strategy"],
                        "delay_proba": r["delay_proba"], "seed": r["seed"],
                        "speedup": _fmt(base[key] / c)})
    return out


def gain_table(rows: list[dict]) -> list[dict]:
    """Percentage gain 100 * (cost_uniform / cost_cb - 1) per matching row pair."""
    by_key: dict = {}
    for r in rows:
        if r["strategy"] in ("uniform", "cb") and _cost(r) is not None:
            key = (str(r["n"]), str(r["k"]), str(r["delay_proba"]), str(r["seed"]))
            by_key.setdefault(key, {})[r["strategy"]] = _cost(r)
    out = []
    for key, pair in by_key.items():
        if len(pair) != 2:
            log.info("no uniform/cb pair for n=%s k=%s delay=%s seed=%s", *key)
            continue
        gain = 100.0 * (pair["uniform"] / pair["cb"] - 1.0)
        out.append(dict(zip(GAIN_HEADER, (*key, _fmt(pair["uniform"]), _fmt(pair["cb"]), _fmt(gain)))))
    return out


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def write_csv(path, header: list[str], rows: list[dict]) -> None:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=header, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({h: r[h] for h in header})
    Path(path).write_text(buf.getvalue())

"""Time-stepped simulation of K asynchronous PIDs sharing one D-iteration.

Every time step each PID may spend ``pid_speed`` elementary operations on its
own interval, then gets one transmission opportunity. Fluid for nodes owned
by other PIDs is derived from the increment of H since the last export and
travels in transmissions that become visible at the start of the next step,
or later when the delay model defers them.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernels as K
from .graph import Graph
from .partition import Partition, adapt_boundary, cost_balanced_partition, uniform_partition
from .solver import SolverConfig, SolverState, init_state, scan_pass, sleep_residual

log = logging.getLogger(__name__)

STRATEGIES = ("uniform", "cb", "adaptive")


class SimulationAborted(RuntimeError):
    def __init__(self, message: str, result: "SimResult"):
        super().__init__(message)
        self.result = result


@dataclass(frozen=True)
class SimConfig:
    k: int = 1
    pid_speed: Optional[int] = None  # None means L // K
    delay_proba: float = 0.0
    strategy: str = "uniform"
    target_error: Optional[float] = None  # None means 1/N
    seed: int = 0
    solver: SolverConfig = SolverConfig()
    max_steps: int = 1_000_000
    rescale: str = "up"  # "up": T *= (r+rec)/r; "min": T *= c * min((r+rec)/r, rec * unit)
    rescale_constant: float = 1.0
    rescale_unit: float = 1.0
    sleep_share: Optional[float] = None  # None means 1 for k == 1, else 0.5
    adapt_interval: int = 1
    record_trace: bool = True

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.pid_speed is not None and self.pid_speed < 1:
            raise ValueError("pid_speed must be >= 1")
        if not 0.0 <= self.delay_proba < 1.0:
            raise ValueError("delay_proba must lie in [0, 1)")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"strategy must be one of {STRATEGIES}")
        if self.strategy == "adaptive" and self.k != 2:
            raise ValueError("adaptive strategy needs k == 2")
        if self.rescale not in ("up", "min"):
            raise ValueError("rescale must be 'up' or 'min'")
        if self.sleep_share is not None and not 0.0 < self.sleep_share <= 1.0:
            raise ValueError("sleep_share must lie in (0, 1]")
        if self.adapt_interval < 1:
            raise ValueError("adapt_interval must be >= 1")


@dataclass
class Message:
    """Fluid from one PID to one destination PID."""

    src: int
    dst: int
    nodes: np.ndarray
    masses: np.ndarray
    ranges: list  # (lo, hi, mass per node)
    dispatch_step: int
    delivery_step: int

    @property
    def mass(self) -> float:
        return float(self.masses.sum()) + sum((b - a) * m for a, b, m in self.ranges)


@dataclass
class Transmission:
    """Everything one PID emits at one opportunity; holds one message per destination."""

    src: int
    nodes: np.ndarray
    masses: np.ndarray
    ranges: list
    dispatch_step: int
    delivery_step: int
    attempts: int  # opportunities spent waiting on the delay model

    @property
    def mass(self) -> float:
        return float(self.masses.sum()) + sum((b - a) * m for a, b, m in self.ranges)

    def messages(self, partition: Partition) -> list[Message]:
        owner = partition.owner(self.nodes)
        out = []
        for dst in range(partition.k):
            sel = owner == dst
            rng = [(max(a, lo), min(b, hi), m) for a, b, m in self.ranges
                   for lo, hi in [partition.interval(dst)] if max(a, lo) < min(b, hi)]
            if sel.any() or rng:
                out.append(Message(self.src, dst, self.nodes[sel], self.masses[sel], rng,
                                   self.dispatch_step, self.delivery_step))
        return out


@dataclass(eq=False)
class PidState:
    pid: int
    solver: SolverState
    rng: np.random.Generator
    buf_idx: np.ndarray = field(default_factory=lambda: np.zeros(64, dtype=np.int64))
    buf_mass: np.ndarray = field(default_factory=lambda: np.zeros(64))
    buf_count: int = 0
    pending_ranges: list = field(default_factory=list)
    s_k: float = 0.0
    pending_send: bool = False
    attempts: int = 0
    sleeping: bool = False
    debt: int = 0
    total_ops: int = 0
    total_idle: int = 0
    last_idle: int = 0

    @property
    def residual(self) -> float:
        return self.solver.residual

    @property
    def interval(self) -> tuple[int, int]:
        return self.solver.lo, self.solver.hi

    def work_done(self) -> int:
        return self.total_ops + self.debt

    def pending_mass(self) -> float:
        return float(self.buf_mass[:self.buf_count].sum()) + sum(
            (b - a) * m for a, b, m in self.pending_ranges)


@dataclass
class Trace:
    """Per (step, PID) rows plus one global row per step."""

    step: list = field(default_factory=list)
    pid: list = field(default_factory=list)
    norm_cost: list = field(default_factory=list)
    bound: list = field(default_factory=list)
    s_k: list = field(default_factory=list)
    idle_frac: list = field(default_factory=list)
    global_step: list = field(default_factory=list)
    global_cost: list = field(default_factory=list)
    global_bound: list = field(default_factory=list)
    global_pending: list = field(default_factory=list)
    global_idle: list = field(default_factory=list)
    converged: list = field(default_factory=list)

    def csv_lines(self, final_cost: float, final_idle: float) -> list[str]:
        lines = ["step,pid,norm_cost,bound,s_k,idle_frac"]
        rows = iter(zip(self.step, self.pid, self.norm_cost, self.bound, self.s_k, self.idle_frac))
        row = next(rows, None)
        for gs, gc, gb, gp, gi in zip(self.global_step, self.global_cost, self.global_bound,
                                      self.global_pending, self.global_idle):
            while row is not None and row[0] == gs:
                lines.append(f"{row[0]},{row[1]},{row[2]:.9g},{row[3]:.9g},{row[4]:.9g},{row[5]:.9g}")
                row = next(rows, None)
            lines.append(f"{gs},all,{gc:.9g},{gb:.9g},{gp:.9g},{gi:.9g}")
        lines.append(f"TOTAL,{final_cost:.9g},{final_idle:.9g}")
        return lines


@dataclass
class SimResult:
    h: np.ndarray
    converged_at: float  # slowest PID, operations plus idle capacity, in units of L
    pid_costs: list  # operations only, in units of L
    pid_idle: list  # idle capacity, in units of L
    idle: list  # per-PID idle proportion
    idle_global: float
    steps: int
    converged: bool
    trace: Trace
    partition: Partition
    boundary_history: list  # (step, boundaries)
    delays: list  # failed opportunities per transmission
    transmissions: int
    dispatched_mass: float
    delivered_mass: float
    max_send_ratio: float  # max of s_k / (r_k + target error)
    bound_violation: float  # max of (1 - |H|) - bound over checked steps


def rescaled_threshold(threshold: float, residual: float, received: float, mode: str = "up",
                       constant: float = 1.0, unit: float = 1.0) -> float:
    """Threshold after a reception; set to the received mass when r was 0.

    ``"up"`` scales by the residual growth (r + rec)/r. ``"min"`` scales by
    ``constant * min((r + rec)/r, rec * unit)``; with probability-normalised
    masses (unit 1) the second term nearly always wins and shrinks T.
    """
    if residual <= 0.0:
        return received
    growth = (residual + received) / residual
    if mode == "up":
        return threshold * growth
    return threshold * constant * min(growth, received * unit)


def initial_partition(g: Graph, cfg: SimConfig) -> Partition:
    if cfg.strategy == "cb":
        return cost_balanced_partition(g, cfg.k)
    return uniform_partition(g.n, cfg.k)


class Simulation:
    """Deterministic single-scheduler driver; see :func:`run`."""

    def __init__(self, g: Graph, cfg: SimConfig, partition: Optional[Partition] = None):
        if g.n == 0:
            raise ValueError("graph has no nodes")
        self.g = g
        self.cfg = cfg
        self.scfg = cfg.solver
        self.d = cfg.solver.damping
        self.eps = cfg.target_error if cfg.target_error is not None else cfg.solver.error_target(g.n)
        self.partition = partition or initial_partition(g, cfg)
        if self.partition.k != cfg.k or self.partition.n != g.n:
            raise ValueError("partition does not match graph and k")
        self.scale = max(g.edge_count, 1)
        self.pid_speed = cfg.pid_speed or max(1, g.edge_count // cfg.k)
        share = cfg.sleep_share if cfg.sleep_share is not None else (1.0 if cfg.k == 1 else 0.5)
        # the rest of the error budget is left for fluid pending or in transit
        self.sleep_thr = share * sleep_residual(self.d, self.eps, cfg.k)
        self.f = np.zeros(g.n)
        self.h = np.zeros(g.n)
        self.h_old = np.zeros(g.n)
        self.dirty = np.zeros(g.n, dtype=np.bool_)
        streams = np.random.SeedSequence(cfg.seed).spawn(cfg.k)
        self.pids = []
        for k in range(cfg.k):
            st = init_state(g, self.scfg, self.partition.interval(k), f=self.f, h=self.h, dirty=self.dirty)
            self.pids.append(PidState(k, st, np.random.default_rng(streams[k])))
        self.inflight: list[Transmission] = []
        self._cost_prefix = np.concatenate(([0], np.cumsum(np.maximum(g.out_degree, 1))))
        self.trace = Trace()
        self.step = 0
        self.boundary_history = [(0, self.partition.boundaries)]
        self.delays: list[int] = []
        self.dispatched = 0.0
        self.delivered = 0.0
        self.delivered_nodes = np.zeros(g.n)  # cumulative mass received per node
        self.max_send_ratio = 0.0
        self.bound_violation = -np.inf

    # -- per-PID actions ---------------------------------------------------

    def pid_step(self, pid: PidState) -> int:
        """Spend one step of capacity; returns operations charged to this step."""
        cap = self.pid_speed
        pay = min(pid.debt, cap)
        pid.debt -= pay
        avail = cap - pay
        used = pay
        if avail > 0:
            work = scan_pass(pid.solver, self.g, avail, self.sleep_thr)
            pid.debt += max(0, work - avail)
            used += min(work, avail)
        pid.sleeping = pid.solver.residual <= self.sleep_thr
        idle = cap - used
        pid.total_ops += used
        pid.total_idle += idle
        pid.last_idle = idle
        return used

    def compute_outgoing(self, pid: PidState) -> int:
        """Turn the H increment of dirty nodes into pending external fluid."""
        st = pid.solver
        lo, hi = st.lo, st.hi
        ndirty = int(st.st[K.DIRTY_COUNT])
        cost = 0
        if ndirty:
            dirty_nodes = st.dirty_list[:ndirty]
            need = pid.buf_count + int(self.g.out_degree[dirty_nodes].sum())
            if need > len(pid.buf_idx):
                size = max(need, 2 * len(pid.buf_idx))
                pid.buf_idx = np.resize(pid.buf_idx, size)
                pid.buf_mass = np.resize(pid.buf_mass, size)
            pid.buf_count, cost, mass = K.collect_outgoing(
                self.g.indptr, self.g.indices, self.h, self.h_old, lo, hi, self.d, self.dirty,
                st.dirty_list, st.st, pid.buf_idx, pid.buf_mass, pid.buf_count)
            pid.s_k += mass
        per = float(st.fs[K.EXT_UNIFORM])
        if per > 0.0:
            for a, b in ((0, lo), (hi, self.g.n)):
                if a < b:
                    pid.pending_ranges.append((a, b, per))
                    pid.s_k += per * (b - a)
            st.fs[K.EXT_UNIFORM] = 0.0
        pid.debt += cost
        return cost

    def maybe_send(self, pid: PidState) -> Optional[Transmission]:
        """Send condition s_k > r_k / K, subject to the delay model."""
        if pid.s_k <= 0.0 or (pid.buf_count == 0 and not pid.pending_ranges):
            return None
        r = pid.residual
        if not (pid.pending_send or pid.s_k > r / self.cfg.k or pid.sleeping or r <= 0.0):
            return None
        if self.cfg.delay_proba > 0.0 and pid.rng.random() < self.cfg.delay_proba:
            pid.pending_send = True
            pid.attempts += 1
            return None
        tx = Transmission(pid.pid, pid.buf_idx[:pid.buf_count].copy(),
                          pid.buf_mass[:pid.buf_count].copy(), pid.pending_ranges,
                          self.step, self.step + 1, pid.attempts)
        self.delays.append(pid.attempts)
        pid.buf_count = 0
        pid.pending_ranges = []
        pid.s_k = 0.0
        pid.pending_send = False
        pid.attempts = 0
        self.inflight.append(tx)
        self.dispatched += tx.mass
        return tx

    def deliver_due(self) -> np.ndarray:
        """Merge every due transmission into its current owners' fluid."""
        k = self.cfg.k
        received = np.zeros(k)
        due = [tx for tx in self.inflight if tx.delivery_step <= self.step]
        if not due:
            return received
        self.inflight = [tx for tx in self.inflight if tx.delivery_step > self.step]
        bounds = self.partition.as_array()
        for tx in due:
            if tx.nodes.size:
                K.scatter_add(self.f, tx.nodes, tx.masses)
                K.scatter_add(self.delivered_nodes, tx.nodes, tx.masses)
                owner = self.partition.owner(tx.nodes)
                received += np.bincount(owner, weights=tx.masses, minlength=k)
            for a, b, m in tx.ranges:
                for dst in range(self.partition.owner(a), self.partition.owner(b - 1) + 1):
                    x, y = max(a, bounds[dst]), min(b, bounds[dst + 1])
                    self.f[x:y] += m
                    self.delivered_nodes[x:y] += m
                    received[dst] += m * (y - x)
            self.delivered += tx.mass
        for pid, rec in zip(self.pids, received):
            if rec > 0.0:
                self._receive(pid, rec)
        return received

    def _receive(self, pid: PidState, received: float) -> None:
        st = pid.solver
        r = st.residual
        st.threshold = rescaled_threshold(st.threshold, r, received, self.cfg.rescale,
                                          self.cfg.rescale_constant, self.cfg.rescale_unit)
        st.fs[K.RESIDUAL] = r + received
        pid.sleeping = False

    # -- global bookkeeping -------------------------------------------------

    def inflight_mass(self) -> float:
        return sum(tx.mass for tx in self.inflight)

    def global_mass(self, exact: bool = False) -> float:
        if exact:
            for pid in self.pids:
                pid.solver.recompute_residual()
        return (sum(p.residual for p in self.pids) + sum(p.s_k for p in self.pids)
                + self.inflight_mass())

    def global_bound(self, exact: bool = False) -> float:
        return self.global_mass(exact) / (1.0 - self.d)

    def _record(self, converged: bool, bound: float) -> None:
        tr = self.trace
        L = self.scale
        ops = idle = 0
        for pid in self.pids:
            tot = pid.total_ops + pid.total_idle
            tr.step.append(self.step)
            tr.pid.append(pid.pid)
            tr.norm_cost.append(pid.total_ops / L)
            tr.bound.append(pid.residual / (1.0 - self.d))
            tr.s_k.append(pid.s_k)
            tr.idle_frac.append(pid.total_idle / tot if tot else 0.0)
            ops += pid.total_ops
            idle += pid.total_idle
        tr.global_step.append(self.step)
        tr.global_cost.append(max((p.work_done() + p.total_idle) / L for p in self.pids))
        tr.global_bound.append(bound)
        tr.global_pending.append(sum(p.s_k for p in self.pids) + self.inflight_mass())
        tr.global_idle.append(idle / (ops + idle) if ops + idle else 0.0)
        tr.converged.append(converged)

    # -- adaptation --------------------------------------------------------

    def maybe_adapt(self) -> bool:
        res = [p.residual for p in self.pids]
        # iterations counted as sweeps over each PID's own edges
        prefix = self._cost_prefix
        ops = [p.work_done() / max(1, int(prefix[p.solver.hi] - prefix[p.solver.lo])) for p in self.pids]
        new = adapt_boundary(self.partition, res, ops)
        if new == self.partition:
            return False
        self.repartition(new)
        return True

    def repartition(self, new: Partition) -> None:
        """Hand nodes over; F and H stay in place, only ownership moves."""
        for pid in self.pids:
            self.compute_outgoing(pid)
        # every increment is now either applied internally or buffered
        self.h_old[:] = self.h
        old = self.partition
        self.partition = new
        for k, pid in enumerate(self.pids):
            st = pid.solver
            (olo, ohi), (lo, hi) = old.interval(k), new.interval(k)
            gained = max(0, olo - lo) + max(0, hi - ohi)
            pid.debt += gained
            st.lo, st.hi = lo, hi
            st.dirty_list = np.zeros(max(1, hi - lo), dtype=np.int64)
            if not lo <= st.cursor < hi:
                st.st[K.CURSOR] = lo
            st.recompute_residual()
            pid.sleeping = st.residual <= self.sleep_thr
        self.boundary_history.append((self.step, new.boundaries))
        log.debug("step %d: boundaries %s", self.step, new.boundaries)

    # -- main loop ---------------------------------------------------------

    def run(self) -> SimResult:
        cfg = self.cfg
        converged = False
        while True:
            self.step += 1
            if self.step > cfg.max_steps:
                self.step -= 1
                raise SimulationAborted(f"no convergence within {cfg.max_steps} steps",
                                        self._result(False))
            self.deliver_due()
            for pid in self.pids:
                self.pid_step(pid)
                self.compute_outgoing(pid)
                if pid.s_k > 0.0:
                    self.max_send_ratio = max(self.max_send_ratio, pid.s_k / (pid.residual + self.eps))
                self.maybe_send(pid)
            mass = self.global_mass()
            if mass / (1.0 - self.d) <= self.eps:
                mass = self.global_mass(exact=True)
                converged = mass / (1.0 - self.d) <= self.eps
            bound = mass / (1.0 - self.d)
            self.bound_violation = max(self.bound_violation, (1.0 - self.h.sum()) - bound)
            if cfg.record_trace:
                self._record(converged, bound)
            if converged:
                break
            if cfg.strategy == "adaptive" and self.step % cfg.adapt_interval == 0:
                self.maybe_adapt()
        for pid in self.pids:
            # the final step's spare capacity is not idle time
            pid.total_idle -= pid.last_idle
        return self._result(True)

    def _result(self, converged: bool) -> SimResult:
        L = self.scale
        ops = [p.work_done() for p in self.pids]
        idle = [p.total_idle for p in self.pids]
        tot_ops, tot_idle = sum(ops), sum(idle)
        return SimResult(
            h=self.h.copy(),
            converged_at=max((o + i) / L for o, i in zip(ops, idle)),
            pid_costs=[o / L for o in ops],
            pid_idle=[i / L for i in idle],
            idle=[i / (o + i) if o + i else 0.0 for o, i in zip(ops, idle)],
            idle_global=tot_idle / (tot_ops + tot_idle) if tot_ops + tot_idle else 0.0,
            steps=self.step,
            converged=converged,
            trace=self.trace,
            partition=self.partition,
            boundary_history=self.boundary_history,
            delays=self.delays,
            transmissions=len(self.delays),
            dispatched_mass=self.dispatched,
            delivered_mass=self.delivered,
            max_send_ratio=self.max_send_ratio,
            bound_violation=self.bound_violation,
        )


def run(g: Graph, cfg: SimConfig, partition: Optional[Partition] = None) -> SimResult:
    """Simulate until (sum r_k + pending + in-flight)/(1-d) <= target error."""
    return Simulation(g, cfg, partition).run()


def run_adaptive(g: Graph, cfg: SimConfig) -> SimResult:
    """K=2 run starting from the uniform split with boundary adaptation on."""
    if cfg.k != 2:
        raise ValueError("adaptive runs need k == 2")
    if cfg.strategy != "adaptive":
        cfg = SimConfig(**{**cfg.__dict__, "strategy": "adaptive"})
    return Simulation(g, cfg, uniform_partition(g.n, 2)).run()


def idle_proportion(result: SimResult) -> tuple[list[float], float]:
    """idle / (operations + idle), per PID and over all PIDs."""
    return result.idle, result.idle_global

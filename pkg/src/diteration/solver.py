"""Single-partition D-iteration: fluid diffusion with a cyclic threshold scan."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernels as K
from .graph import Graph


class ConvergenceError(RuntimeError):
    """The operation guard tripped before the target error was reached."""


@dataclass(frozen=True)
class SolverConfig:
    damping: float = 0.85
    alpha: float = 1.5
    target_error: Optional[float] = None  # None means 1/N
    personalization: Optional[np.ndarray] = None  # None means uniform
    selection: str = "weighted"
    pool_drain_fraction: float = 0.1

    def __post_init__(self):
        if not 0.0 < self.damping < 1.0:
            raise ValueError("damping must lie in (0, 1)")
        if self.alpha <= 1.0:
            raise ValueError("alpha must be > 1")
        if self.target_error is not None and self.target_error <= 0:
            raise ValueError("target_error must be positive")
        if self.selection not in ("weighted", "raw"):
            raise ValueError("selection must be 'weighted' or 'raw'")
        if self.personalization is not None:
            v = np.asarray(self.personalization, dtype=np.float64)
            if (v < 0).any() or abs(v.sum() - 1.0) > 1e-12:
                raise ValueError("personalization must be a probability vector")

    def error_target(self, n: int) -> float:
        return self.target_error if self.target_error is not None else 1.0 / n

    def source(self, n: int) -> np.ndarray:
        """B = (1-d) V."""
        if self.personalization is None:
            return np.full(n, (1.0 - self.damping) / n)
        v = np.asarray(self.personalization, dtype=np.float64)
        if v.shape != (n,):
            raise ValueError(f"personalization has length {v.size}, graph has {n} nodes")
        return (1.0 - self.damping) * v


def selection_weights(g: Graph, selection: str) -> np.ndarray:
    if selection == "raw":
        return np.ones(g.n)
    return 1.0 / ((g.in_degree + 1.0) * (g.out_degree + 1.0))


@dataclass(eq=False)
class SolverState:
    """Fluid/history pair restricted to the owned interval [lo, hi).

    ``f`` and ``h`` have length N; entries outside the interval are never
    written by this state, so several states may share the same arrays.
    """

    f: np.ndarray
    h: np.ndarray
    lo: int
    hi: int
    damping: float
    alpha: float
    weight: np.ndarray
    pool_drain_fraction: float = 0.1
    fs: np.ndarray = field(default_factory=lambda: np.zeros(4))
    st: np.ndarray = field(default_factory=lambda: np.zeros(3, dtype=np.int64))
    dirty: Optional[np.ndarray] = None
    dirty_list: Optional[np.ndarray] = None
    ops_done: int = 0

    def __post_init__(self):
        if self.dirty is None:
            self.dirty = np.zeros(len(self.f), dtype=np.bool_)
        if self.dirty_list is None:
            self.dirty_list = np.zeros(max(1, self.hi - self.lo), dtype=np.int64)

    @property
    def residual(self) -> float:
        return float(self.fs[K.RESIDUAL])

    @property
    def dangling_pool(self) -> float:
        return float(self.fs[K.POOL])

    @property
    def threshold(self) -> float:
        return float(self.fs[K.THRESHOLD])

    @threshold.setter
    def threshold(self, value: float) -> None:
        self.fs[K.THRESHOLD] = value

    @property
    def cursor(self) -> int:
        return int(self.st[K.CURSOR])

    @property
    def owned(self) -> range:
        return range(self.lo, self.hi)

    def recompute_residual(self) -> float:
        return K.exact_residual(self.f, self.lo, self.hi, self.fs)

    def reset_threshold(self) -> None:
        seg = slice(self.lo, self.hi)
        self.fs[K.THRESHOLD] = float(np.max(self.f[seg] * self.weight[seg], initial=0.0))


def init_state(g: Graph, cfg: SolverConfig, owned: tuple[int, int] | range | None = None,
               f: Optional[np.ndarray] = None, h: Optional[np.ndarray] = None,
               dirty: Optional[np.ndarray] = None) -> SolverState:
    """Fresh state with H = 0 and F = B on the owned interval (default: all nodes)."""
    lo, hi = (0, g.n) if owned is None else (owned.start, owned.stop) if isinstance(owned, range) else owned
    if not 0 <= lo < hi <= g.n:
        raise ValueError(f"owned interval [{lo}, {hi}) is empty or outside [0, {g.n})")
    if f is None:
        f = np.zeros(g.n)
    if h is None:
        h = np.zeros(g.n)
    f[lo:hi] = cfg.source(g.n)[lo:hi]
    h[lo:hi] = 0.0
    state = SolverState(f=f, h=h, lo=lo, hi=hi, damping=cfg.damping, alpha=cfg.alpha,
                        weight=selection_weights(g, cfg.selection),
                        pool_drain_fraction=cfg.pool_drain_fraction, dirty=dirty)
    state.st[K.CURSOR] = lo
    state.recompute_residual()
    state.reset_threshold()
    return state


def diffuse_node(state: SolverState, g: Graph, i: int) -> int:
    """Move F[i] into H[i] and push d*F[i]/#out_i to each owned child."""
    if not state.lo <= i < state.hi:
        raise ValueError(f"node {i} is not owned by this state")
    work = K.diffuse(g.indptr, g.indices, state.f, state.h, state.lo, state.hi, state.damping,
                     state.fs, state.st, state.dirty, state.dirty_list, i)
    state.ops_done += work
    return work


def scan_pass(state: SolverState, g: Graph, budget: int, sleep_residual: float = 0.0) -> int:
    """Run the cyclic threshold scan for about ``budget`` elementary operations."""
    work = K.scan(g.indptr, g.indices, state.weight, state.f, state.h, state.lo, state.hi,
                  g.n, state.damping, state.alpha, state.pool_drain_fraction, sleep_residual,
                  state.fs, state.st, state.dirty, state.dirty_list, int(budget))
    state.ops_done += work
    return work


def error_bound(state: SolverState) -> float:
    """L1 distance bound |X - H| <= r / (1 - d)."""
    return state.residual / (1.0 - state.damping)


def sleep_residual(damping: float, target_error: float, parts: int = 1) -> float:
    """Residual below which a unit owning 1/parts of the error budget may stop."""
    return (1.0 - damping) * target_error / parts


@dataclass
class SolveResult:
    h: np.ndarray
    normalized_cost: float
    ops: int
    residual: float
    checkpoints: list = field(default_factory=list)  # (ops, |H|, residual)


def solve_single(g: Graph, cfg: SolverConfig = SolverConfig(), *, checkpoint_ops: Optional[int] = None,
                 max_ops_factor: float = 1e4) -> SolveResult:
    """Diffuse until r/(1-d) <= target error; cost is reported in units of L."""
    if g.n == 0:
        raise ValueError("graph has no nodes")
    eps = cfg.error_target(g.n)
    state = init_state(g, cfg)
    stop = sleep_residual(cfg.damping, eps)
    scale = max(g.edge_count, 1)
    max_ops = max_ops_factor * scale
    chunk = checkpoint_ops or max(scale, 1)
    checkpoints = [(0, float(state.h.sum()), state.residual)]
    while state.residual > stop or state.recompute_residual() > stop:
        if scan_pass(state, g, chunk, stop) == 0 and state.recompute_residual() > stop:
            raise ConvergenceError("scan made no progress")
        if checkpoint_ops:
            checkpoints.append((state.ops_done, float(state.h.sum()), state.residual))
        if state.ops_done > max_ops:
            raise ConvergenceError(f"no convergence after {state.ops_done} operations")
    return SolveResult(h=state.h, normalized_cost=state.ops_done / scale, ops=state.ops_done,
                       residual=state.residual, checkpoints=checkpoints)

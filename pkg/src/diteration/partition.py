"""Contiguous node-interval partitions assigning work to PIDs."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .graph import Graph


@dataclass(frozen=True)
class Partition:
    """Boundaries 0 = w_0 < w_1 < ... < w_K = N; part k owns [w_k, w_{k+1})."""

    boundaries: tuple[int, ...]

    def __post_init__(self):
        b = tuple(int(x) for x in self.boundaries)
        object.__setattr__(self, "boundaries", b)
        if len(b) < 2 or b[0] != 0:
            raise ValueError("boundaries must start at 0 and define at least one part")
        if any(x >= y for x, y in zip(b, b[1:])):
            raise ValueError(f"boundaries must be strictly increasing: {b}")

    @property
    def k(self) -> int:
        return len(self.boundaries) - 1

    @property
    def n(self) -> int:
        return self.boundaries[-1]

    def interval(self, k: int) -> tuple[int, int]:
        return self.boundaries[k], self.boundaries[k + 1]

    def sizes(self) -> list[int]:
        return [b - a for a, b in zip(self.boundaries, self.boundaries[1:])]

    def owner(self, nodes):
        """Part index owning each node (vectorised)."""
        return np.searchsorted(np.asarray(self.boundaries), nodes, side="right") - 1

    def as_array(self) -> np.ndarray:
        return np.asarray(self.boundaries, dtype=np.int64)

    def csv(self) -> str:
        return "part,start,end\n" + "".join(
            f"{k},{a},{b}\n" for k, (a, b) in enumerate(zip(self.boundaries, self.boundaries[1:])))


def _check_parts(n: int, k: int) -> None:
    if k < 1:
        raise ValueError("need at least one part")
    if k > n:
        raise ValueError(f"cannot split {n} nodes into {k} non-empty parts")


def uniform_partition(n: int, k: int) -> Partition:
    """Equal-cardinality intervals; the leading parts take the remainder."""
    _check_parts(n, k)
    q, rem = divmod(n, k)
    return Partition(tuple(i * q + min(i, rem) for i in range(k + 1)))


def node_costs(g: Graph) -> np.ndarray:
    """Per-node diffusion cost: #out, with dangling nodes costing 1."""
    return np.maximum(g.out_degree, 1)


def cost_balanced_partition(g: Graph, k: int) -> Partition:
    """Greedy sweep closing a part once its cost reaches ceil(remaining / parts left)."""
    return cost_balanced_from_costs(node_costs(g), k)


def cost_balanced_from_costs(costs: Sequence[int], k: int) -> Partition:
    costs = np.asarray(costs, dtype=np.int64)
    n = len(costs)
    _check_parts(n, k)
    prefix = np.concatenate(([0], np.cumsum(costs)))
    total = int(prefix[-1])
    bounds = [0]
    start = 0
    for part in range(k - 1):
        remaining = total - int(prefix[start])
        target = -(-remaining // (k - part))
        # first end with cumulative cost >= target, leaving a node per later part
        end = int(np.searchsorted(prefix, prefix[start] + target, side="left"))
        end = min(max(end, start + 1), n - (k - 1 - part))
        bounds.append(end)
        start = end
    bounds.append(n)
    return Partition(tuple(bounds))


def adapt_boundary(p: Partition, residuals: Sequence[float], ops: Sequence[float],
                   residual_ratio: float = 2.0, ops_ratio: float = 1.2,
                   step: float = 0.1) -> Partition:
    """Move the single interior boundary of a 2-part partition.

    Fires when both the residual ratio and the operation-count ratio exceed
    their triggers; the part with the larger residual shrinks by ``step``
    times the current boundary value.
    """
    if p.k != 2:
        raise NotImplementedError("boundary adaptation is defined for two parts only")
    r1, r2 = float(residuals[0]), float(residuals[1])
    o1, o2 = float(ops[0]), float(ops[1])
    if not (_ratio(r1, r2) > residual_ratio and _ratio(o1, o2) > ops_ratio):
        return p
    w = p.boundaries[1]
    delta = round(step * w)
    new = w - delta if r1 > r2 else w + delta
    new = min(max(new, 1), p.n - 1)
    return p if new == w else Partition((0, new, p.n))


def _ratio(a: float, b: float) -> float:
    lo, hi = min(a, b), max(a, b)
    if hi <= 0.0:
        return 1.0
    return hi / lo if lo > 0.0 else float("inf")

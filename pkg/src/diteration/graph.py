"""Directed web graphs stored as out-adjacency (CSR) with degree metadata."""
from __future__ import annotations

import gzip
import io
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import BinaryIO, Iterable, Optional, Union

import numpy as np

GZIP_MAGIC = b"\x1f\x8b"


class EdgeListError(ValueError):
    """Raised for malformed edge-list input."""


@dataclass(frozen=True, eq=False)
class Graph:
    """Immutable sparse graph; ``indices[indptr[j]:indptr[j+1]]`` are the children of j.

    Edge j -> i means a non-null entry q_ij = 1/#out_j of the transition matrix.
    """

    indptr: np.ndarray
    indices: np.ndarray
    in_degree: np.ndarray

    def __post_init__(self):
        for arr in (self.indptr, self.indices, self.in_degree):
            arr.setflags(write=False)

    @classmethod
    def from_edges(cls, n: int, src, dst) -> "Graph":
        """Build from parallel edge arrays; duplicates are collapsed, children sorted."""
        n = int(n)
        if n < 0:
            raise ValueError("node count must be non-negative")
        src = np.asarray(src, dtype=np.int64).ravel()
        dst = np.asarray(dst, dtype=np.int64).ravel()
        if src.shape != dst.shape:
            raise ValueError("src and dst must have equal length")
        if src.size and (src.min() < 0 or dst.min() < 0 or src.max() >= n or dst.max() >= n):
            raise ValueError(f"edge endpoint outside [0, {n})")
        keys = np.unique(src * n + dst) if src.size else np.empty(0, dtype=np.int64)
        s, t = np.divmod(keys, n) if n else (keys, keys)
        out_degree = np.bincount(s, minlength=n).astype(np.int64)
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(out_degree, out=indptr[1:])
        in_degree = np.bincount(t, minlength=n).astype(np.int64)
        return cls(indptr, t.astype(np.int64), in_degree)

    @property
    def n(self) -> int:
        return len(self.indptr) - 1

    @property
    def edge_count(self) -> int:
        return int(self.indptr[-1])

    @property
    def out_degree(self) -> np.ndarray:
        return np.diff(self.indptr)

    @property
    def dangling(self) -> np.ndarray:
        return np.flatnonzero(self.out_degree == 0)

    def children(self, j: int) -> np.ndarray:
        if not 0 <= j < self.n:
            raise IndexError(f"node {j} outside [0, {self.n})")
        return self.indices[self.indptr[j]:self.indptr[j + 1]]

    def out_adjacency(self) -> list[list[int]]:
        return [self.children(j).tolist() for j in range(self.n)]

    def edges(self) -> tuple[np.ndarray, np.ndarray]:
        src = np.repeat(np.arange(self.n, dtype=np.int64), self.out_degree)
        return src, self.indices.copy()

    def truncate(self, max_node: int) -> "Graph":
        """Induced subgraph on the first ``max_node`` nodes."""
        src, dst = self.edges()
        keep = (src < max_node) & (dst < max_node)
        return Graph.from_edges(max_node, src[keep], dst[keep])

    def __eq__(self, other) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return (np.array_equal(self.indptr, other.indptr)
                and np.array_equal(self.indices, other.indices)
                and np.array_equal(self.in_degree, other.in_degree))

    __hash__ = None


@dataclass(frozen=True)
class GraphStats:
    n: int
    edge_count: int
    dangling_count: int

    @property
    def avg_degree(self) -> Fraction:
        return Fraction(self.edge_count, self.n) if self.n else Fraction(0)

    @property
    def dangling_fraction(self) -> Fraction:
        return Fraction(self.dangling_count, self.n) if self.n else Fraction(0)

    def csv_header(self) -> str:
        return "n,edges,avg_degree,dangling,dangling_pct"

    def csv_row(self) -> str:
        return (f"{self.n},{self.edge_count},{float(self.avg_degree):.1f},"
                f"{self.dangling_count},{100 * float(self.dangling_fraction):.1f}")


def stats(g: Graph) -> GraphStats:
    return GraphStats(n=g.n, edge_count=g.edge_count,
                      dangling_count=int(np.count_nonzero(g.out_degree == 0)))


def _parse_lines(lines: Iterable[bytes], max_node: Optional[int]):
    src: list[int] = []
    dst: list[int] = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith(b"#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise EdgeListError(f"line {lineno}: expected 'src dst', got {raw!r}")
        try:
            a, b = int(parts[0]), int(parts[1])
        except ValueError:
            raise EdgeListError(f"line {lineno}: non-integer node id in {raw!r}") from None
        if a < 0 or b < 0:
            raise EdgeListError(f"line {lineno}: negative node id")
        if max_node is not None and (a >= max_node or b >= max_node):
            continue
        src.append(a)
        dst.append(b)
    return src, dst


def load_edge_list(source: Union[str, Path, bytes, BinaryIO],
                   max_node: Optional[int] = None) -> Graph:
    """Read a ``src dst`` text edge list (optionally gzip-compressed).

    With ``max_node`` the result is the subgraph induced by nodes ``< max_node``.
    """
    if isinstance(source, (str, Path)):
        data = Path(source).read_bytes()
    elif isinstance(source, bytes):
        data = source
    else:
        data = source.read()
    if data[:2] == GZIP_MAGIC:
        data = gzip.decompress(data)
    src, dst = _parse_lines(io.BytesIO(data), max_node)
    if max_node is not None:
        if max_node < 0:
            raise EdgeListError("max_node must be non-negative")
        n = max_node
    elif src:
        n = 1 + max(max(src), max(dst))
    else:
        raise EdgeListError("empty edge list and no node count given")
    return Graph.from_edges(n, src, dst)


def write_edge_list(g: Graph, path: Union[str, Path]) -> None:
    src, dst = g.edges()
    body = "\n".join(f"{a} {b}" for a, b in zip(src.tolist(), dst.tolist()))
    data = (f"# nodes {g.n} edges {g.edge_count}\n" + body + "\n").encode()
    path = Path(path)
    if path.suffix == ".gz":
        data = gzip.compress(data, mtime=0)
    path.write_bytes(data)

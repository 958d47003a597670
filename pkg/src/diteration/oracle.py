"""Reference PageRank solutions with dangling columns completed by 1/N."""
from __future__ import annotations

from typing import Optional

import numpy as np
import scipy.sparse as sp

from .graph import Graph

DENSE_LIMIT = 500


def _personalization(g: Graph, v: Optional[np.ndarray]) -> np.ndarray:
    if v is None:
        return np.full(g.n, 1.0 / g.n)
    return np.asarray(v, dtype=np.float64)


def transition_matrix(g: Graph) -> sp.csr_matrix:
    """Sparse Q with q_ij = 1/#out_j (dangling columns left empty)."""
    src, dst = g.edges()
    deg = g.out_degree
    data = 1.0 / deg[src] if src.size else np.empty(0)
    return sp.csr_matrix((data, (dst, src)), shape=(g.n, g.n))


def completed_matrix(g: Graph) -> np.ndarray:
    """Dense column-stochastic Q' (dangling columns set to 1/N)."""
    if g.n > DENSE_LIMIT:
        raise ValueError(f"dense completion refused for N={g.n} > {DENSE_LIMIT}")
    q = transition_matrix(g).toarray()
    q[:, g.out_degree == 0] = 1.0 / g.n
    return q


def power_iteration(g: Graph, d: float = 0.85, v: Optional[np.ndarray] = None,
                    tol: float = 1e-14, max_iter: int = 100_000) -> np.ndarray:
    """Iterate X <- dQX + d*(dangling mass)/N + (1-d)V from X = V."""
    v = _personalization(g, v)
    q = transition_matrix(g)
    dangling = g.out_degree == 0
    x = v.copy()
    for _ in range(max_iter):
        nxt = d * (q @ x) + d * x[dangling].sum() / g.n + (1.0 - d) * v
        change = np.abs(nxt - x).sum()
        x = nxt
        if change <= tol:
            break
    return x


def dense_solve(g: Graph, d: float = 0.85, v: Optional[np.ndarray] = None) -> np.ndarray:
    """Exact solution of (I - dQ')X = (1-d)V by LU with partial pivoting."""
    v = _personalization(g, v)
    a = np.eye(g.n) - d * completed_matrix(g)
    return np.linalg.solve(a, (1.0 - d) * v)


def power_iteration_cost(g: Graph, d: float = 0.85, target_error: float = 1e-10) -> int:
    """Sweeps power iteration needs before its own a-posteriori bound
    d/(1-d) * |X_k - X_{k-1}| drops to ``target_error``."""
    v = _personalization(g, None)
    q = transition_matrix(g)
    dangling = g.out_degree == 0
    x = v.copy()
    for k in range(1, 100_000):
        nxt = d * (q @ x) + d * x[dangling].sum() / g.n + (1.0 - d) * v
        change = np.abs(nxt - x).sum()
        x = nxt
        if d / (1.0 - d) * change <= target_error:
            return k
    raise RuntimeError("power iteration did not converge")

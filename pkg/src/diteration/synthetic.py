"""Seeded synthetic web-like graphs used when a real crawl is not at hand.

Nodes are laid out like a URL-sorted crawl: most links stay inside a host
block around the source, the rest go to globally popular pages. Out-degrees
are heavy tailed and their mean drifts along the id range (``skew``), which
makes uniform partitions unbalanced the way crawl orderings often are.
"""
from __future__ import annotations

import numpy as np

from .graph import Graph


def synthetic_web_graph(n: int, mean_degree: float = 12.0, *, dangling_fraction: float = 0.03,
                        skew: float = 0.6, locality: float = 0.9, host_size: int = 200,
                        popularity_exponent: float = 0.8, seed: int = 0) -> Graph:
    """Generate a directed graph on ``n`` nodes.

    ``skew`` is the exponent of the degree drift: node at relative position x
    has expected out-degree proportional to ``0.1 + x**skew`` (0 disables it).
    """
    if n < 1:
        raise ValueError("n must be positive")
    rng = np.random.default_rng(seed)
    x = (np.arange(n) + 0.5) / n
    density = 0.1 + x ** skew if skew > 0 else np.ones(n)
    density /= density.mean()
    # lognormal with sigma=1 has mean exp(mu + 1/2)
    raw = rng.lognormal(mean=-0.5, sigma=1.0, size=n) * mean_degree * density
    deg = np.maximum(1, np.rint(raw)).astype(np.int64)
    deg = np.minimum(deg, max(1, n - 1))
    dangling = rng.random(n) < dangling_fraction
    deg[dangling] = 0

    src = np.repeat(np.arange(n, dtype=np.int64), deg)
    m = src.size
    local = rng.random(m) < locality
    host_start = (src // host_size) * host_size
    host_len = np.minimum(host_size, n - host_start)
    dst = np.empty(m, dtype=np.int64)
    dst[local] = host_start[local] + rng.integers(0, host_len[local])

    n_global = int(m - local.sum())
    ranks = np.arange(1, n + 1, dtype=np.float64)
    weights = ranks ** -popularity_exponent
    weights /= weights.sum()
    popular = rng.permutation(n)
    dst[~local] = popular[rng.choice(n, size=n_global, p=weights)]

    # self-loops are legal entries but rare on the web; drop the synthetic ones
    keep = dst != src
    return Graph.from_edges(n, src[keep], dst[keep])


def web_sample(n: int, seed: int = 0) -> Graph:
    """Stand-in for the first-n-node extracts of a web crawl: L/N about 13 at
    small n and about 31 at n=100000, a few percent dangling nodes."""
    mean_degree = 14.0 if n <= 20000 else 33.0
    return synthetic_web_graph(n, mean_degree, dangling_fraction=0.03,
                               host_size=max(100, min(500, n // 50)), seed=seed)

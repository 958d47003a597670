"""Compiled inner loops. State scalars travel in small arrays so that the
Python-side objects see every update:

    fs = [residual, dangling_pool, threshold, ext_uniform]
    st = [cursor, diffused_in_cycle, dirty_count]

``ext_uniform`` is the per-node mass owed to every node outside [lo, hi)
by dangling-pool drains that has not yet been moved to the outgoing buffer.
"""
import numpy as np
from numba import njit

RESIDUAL, POOL, THRESHOLD, EXT_UNIFORM = 0, 1, 2, 3
CURSOR, DIFFUSED, DIRTY_COUNT = 0, 1, 2


@njit(cache=True)
def diffuse(indptr, indices, f, h, lo, hi, d, fs, st, dirty, dirty_list, i):
    sent = f[i]
    if sent == 0.0:
        return 0
    f[i] = 0.0
    h[i] += sent
    start = indptr[i]
    end = indptr[i + 1]
    deg = end - start
    if deg == 0:
        fs[POOL] += d * sent
        fs[RESIDUAL] -= (1.0 - d) * sent
        return 1
    share = d * sent / deg
    internal = 0
    for p in range(start, end):
        j = indices[p]
        if lo <= j < hi:
            f[j] += share
            internal += 1
    if internal == deg:
        fs[RESIDUAL] -= (1.0 - d) * sent
    else:
        fs[RESIDUAL] -= sent - share * internal
        if not dirty[i]:
            dirty[i] = True
            dirty_list[st[DIRTY_COUNT]] = i
            st[DIRTY_COUNT] += 1
    return internal if internal > 0 else 1


@njit(cache=True)
def drain_pool(f, lo, hi, n, fs):
    pool = fs[POOL]
    if pool <= 0.0:
        return 0
    per = pool / n
    for j in range(lo, hi):
        f[j] += per
    fs[EXT_UNIFORM] += per
    fs[RESIDUAL] += per * (hi - lo) - pool
    fs[POOL] = 0.0
    return hi - lo


@njit(cache=True)
def exact_residual(f, lo, hi, fs):
    r = 0.0
    for j in range(lo, hi):
        r += f[j]
    r += fs[POOL]
    fs[RESIDUAL] = r
    return r


@njit(cache=True)
def scan(indptr, indices, weight, f, h, lo, hi, n, d, alpha, drain_frac,
         sleep_residual, fs, st, dirty, dirty_list, budget):
    """Cyclic threshold scan over [lo, hi); returns elementary operations done.

    Stops once ``budget`` is reached (the last diffusion may overshoot it) or
    the residual is at most ``sleep_residual``.
    """
    work = 0
    while work < budget:
        if fs[RESIDUAL] <= sleep_residual:
            if exact_residual(f, lo, hi, fs) <= sleep_residual:
                break
        i = st[CURSOR]
        fi = f[i]
        if fi > 0.0 and fi * weight[i] > fs[THRESHOLD]:
            work += diffuse(indptr, indices, f, h, lo, hi, d, fs, st, dirty, dirty_list, i)
            st[DIFFUSED] = 1
            if fs[POOL] > drain_frac * fs[RESIDUAL]:
                work += drain_pool(f, lo, hi, n, fs)
        i += 1
        if i == hi:
            i = lo
            if st[DIFFUSED] == 0:
                fs[THRESHOLD] /= alpha
            st[DIFFUSED] = 0
            exact_residual(f, lo, hi, fs)
            if fs[POOL] > 0.0 and fs[POOL] > drain_frac * fs[RESIDUAL]:
                work += drain_pool(f, lo, hi, n, fs)
        st[CURSOR] = i
    return work


@njit(cache=True)
def collect_outgoing(indptr, indices, h, h_old, lo, hi, d, dirty, dirty_list, st,
                     buf_idx, buf_mass, buf_count):
    """Apply d*Q to the H increment of dirty nodes, keeping only external children.

    Appends (node, mass) pairs to the buffers from ``buf_count``; returns
    (new count, number of external edges traversed, mass appended).
    """
    count = buf_count
    cost = 0
    mass = 0.0
    for q in range(st[DIRTY_COUNT]):
        j = dirty_list[q]
        dirty[j] = False
        dh = h[j] - h_old[j]
        h_old[j] = h[j]
        if dh <= 0.0:
            continue
        start = indptr[j]
        end = indptr[j + 1]
        share = d * dh / (end - start)
        for p in range(start, end):
            c = indices[p]
            if c < lo or c >= hi:
                buf_idx[count] = c
                buf_mass[count] = share
                count += 1
                cost += 1
                mass += share
    st[DIRTY_COUNT] = 0
    return count, cost, mass


@njit(cache=True)
def external_degree(indptr, indices, boundaries):
    """Per node, number of children owned by a different interval."""
    n = indptr.shape[0] - 1
    out = np.zeros(n, dtype=np.int64)
    k = 0
    for j in range(n):
        while j >= boundaries[k + 1]:
            k += 1
        lo = boundaries[k]
        hi = boundaries[k + 1]
        c = 0
        for p in range(indptr[j], indptr[j + 1]):
            x = indices[p]
            if x < lo or x >= hi:
                c += 1
        out[j] = c
    return out


@njit(cache=True)
def scatter_add(f, idx, mass):
    for q in range(idx.shape[0]):
        f[idx[q]] += mass[q]

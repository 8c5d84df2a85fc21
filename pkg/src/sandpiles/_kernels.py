"""Numba kernels for the Monte Carlo paths: chain sampling and Wilson's
algorithm on wired lattice boxes.

The random streams use splitmix64, seeded explicitly, so runs are
reproducible across processes. Fall back to pure Python only if numba is
unavailable (it is pre-installed in the supported environments).
"""

from __future__ import annotations

import numpy as np
from numba import njit, uint64

_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)


@njit(cache=True, inline="always")
def _splitmix64(state):
    state = state + uint64(0x9E3779B97F4A7C15)
    z = state
    z = (z ^ (z >> uint64(30))) * uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> uint64(27))) * uint64(0x94D049BB133111EB)
    return state, z ^ (z >> uint64(31))


@njit(cache=True)
def _stabilize_csr(h, indptr, nbrs, deg, queue, inq):
    """FIFO stabilization on flat adjacency; returns particles lost."""
    n = h.shape[0]
    lost = 0
    head = 0
    tail = 0
    for v in range(n):
        inq[v] = False
    for v in range(n):
        if h[v] >= deg[v]:
            queue[tail] = v
            tail = (tail + 1) % queue.shape[0]
            inq[v] = True
    while head != tail:
        v = queue[head]
        head = (head + 1) % queue.shape[0]
        inq[v] = False
        if h[v] < deg[v]:
            continue
        times = h[v] // deg[v]
        h[v] -= times * deg[v]
        for k in range(indptr[v], indptr[v + 1]):
            u = nbrs[k]
            if u < 0:
                lost += times
            else:
                h[u] += times
                if h[u] >= deg[u] and not inq[u]:
                    queue[tail] = u
                    tail = (tail + 1) % queue.shape[0]
                    inq[u] = True
    return lost


@njit(cache=True)
def chain_run(h, indptr, nbrs, deg, seed, burn_in, thin, count, watch):
    """Run the add-and-stabilize chain; record `watch` heights per sample."""
    n = h.shape[0]
    queue = np.empty(n + 1, dtype=np.int64)
    inq = np.zeros(n, dtype=np.bool_)
    out = np.empty((count, watch.shape[0]), dtype=np.int64)
    state = seed
    total = burn_in + thin * count
    taken = 0
    for step in range(total):
        state, z = _splitmix64(state)
        v = np.int64(z % uint64(n))
        h[v] += 1
        _stabilize_csr(h, indptr, nbrs, deg, queue, inq)
        if step >= burn_in and (step - burn_in + 1) % thin == 0:
            for j in range(watch.shape[0]):
                out[taken, j] = h[watch[j]]
            taken += 1
            if taken == count:
                break
    return out


# -- Wilson's algorithm on a wired box ---------------------------------------
#
# Cells are indexed v = x * ny + y. Directions: 0:+x 1:-x 2:+y 3:-y.
# A step leaving the box hits the sink. parent[v] is the direction of the
# parent edge of v; every cell gets one.


@njit(cache=True, inline="always")
def _step(v, d, nx, ny):
    x = v // ny
    y = v % ny
    if d == 0:
        x += 1
    elif d == 1:
        x -= 1
    elif d == 2:
        y += 1
    else:
        y -= 1
    if x < 0 or x >= nx or y < 0 or y >= ny:
        return np.int64(-1)
    return np.int64(x * ny + y)


@njit(cache=True)
def wilson_box(nx, ny, seed):
    """One uniform spanning tree of the wired nx*ny box; returns the
    parent directions (int8 array of length nx*ny)."""
    n = nx * ny
    in_tree = np.zeros(n, dtype=np.bool_)
    nxt = np.zeros(n, dtype=np.int8)
    state = seed
    for v0 in range(n):
        if in_tree[v0]:
            continue
        v = v0
        while v >= 0 and not in_tree[v]:
            state, z = _splitmix64(state)
            d = np.int8(z & uint64(3))
            nxt[v] = d
            v = _step(v, d, nx, ny)
        v = v0
        while v >= 0 and not in_tree[v]:
            in_tree[v] = True
            v = _step(v, nxt[v], nx, ny)
    return nxt


@njit(cache=True)
def wilson_batch_events(nx, ny, seed, samples, pair_u, pair_w, offsets,
                        weights, mass_weights):
    """Sample `samples` wired trees and, for each, evaluate every event
    "no tree edge points from outside the set into it".

    Event k holds when for none of its boundary pairs (u outside, w
    inside) the parent of u is w. Returns per-event hit counts plus the
    running sums needed for a variance estimate of the weighted
    statistics sum_k weights[k]*hit and sum_k mass_weights[k]*hit.
    """
    n_events = offsets.shape[0] - 1
    hits = np.zeros(n_events, dtype=np.int64)
    sum_z = 0.0
    sum_z2 = 0.0
    sum_m = 0.0
    sum_m2 = 0.0
    state = seed
    for smp in range(samples):
        state, z = _splitmix64(state)
        tree = wilson_box(nx, ny, state)
        zval = 0.0
        mval = 0.0
        for k in range(n_events):
            ok = True
            for t in range(offsets[k], offsets[k + 1]):
                u = pair_u[t]
                if _step(u, tree[u], nx, ny) == pair_w[t]:
                    ok = False
                    break
            if ok:
                hits[k] += 1
                zval += weights[k]
                mval += mass_weights[k]
        sum_z += zval
        sum_z2 += zval * zval
        sum_m += mval
        sum_m2 += mval * mval
    return hits, sum_z, sum_z2, sum_m, sum_m2

"""Numba-compiled kernel lane: array binary-heap Dijkstra, parallel over sources."""

from __future__ import annotations

import numpy as np
from numba import config, get_num_threads, njit, prange

# skip the TBB probe (its version check warns on this image); omp or the
# builtin workqueue serve the prange loops fine
config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]


@njit(cache=True)
def _heap_push(hd, hn, size, d, node):
    i = size
    hd[i] = d
    hn[i] = node
    while i > 0:
        parent = (i - 1) >> 1
        if hd[parent] <= hd[i]:
            break
        hd[parent], hd[i] = hd[i], hd[parent]
        hn[parent], hn[i] = hn[i], hn[parent]
        i = parent
    return size + 1


@njit(cache=True)
def _heap_pop(hd, hn, size):
    d = hd[0]
    node = hn[0]
    size -= 1
    if size > 0:
        hd[0] = hd[size]
        hn[0] = hn[size]
        i = 0
        while True:
            left = 2 * i + 1
            if left >= size:
                break
            small = left
            right = left + 1
            if right < size and hd[right] < hd[left]:
                small = right
            if hd[i] <= hd[small]:
                break
            hd[i], hd[small] = hd[small], hd[i]
            hn[i], hn[small] = hn[small], hn[i]
            i = small
    return d, node, size


@njit(cache=True)
def _ball_masses_one(indptr, indices, lengths, weights, source, radii,
                     dist, settled, hd, hn, touched, bins, out_row):
    rmax = radii[radii.size - 1]
    ntouch = 0
    size = _heap_push(hd, hn, 0, 0.0, source)
    dist[source] = 0.0
    touched[ntouch] = source
    ntouch += 1
    while size > 0:
        d, u, size = _heap_pop(hd, hn, size)
        if d >= rmax:
            break
        if settled[u]:
            continue
        settled[u] = 1
        pos = np.searchsorted(radii, d, side="right")
        bins[pos] += weights[u]
        for e in range(indptr[u], indptr[u + 1]):
            v = indices[e]
            if settled[v]:
                continue
            nd = d + lengths[e]
            if nd < dist[v] and nd < rmax:
                if dist[v] == np.inf:
                    touched[ntouch] = v
                    ntouch += 1
                dist[v] = nd
                size = _heap_push(hd, hn, size, nd, v)
    acc = 0.0
    for j in range(radii.size):
        acc += bins[j]
        out_row[j] = acc
        bins[j] = 0.0
    bins[radii.size] = 0.0
    for t in range(ntouch):
        dist[touched[t]] = np.inf
        settled[touched[t]] = 0


@njit(parallel=True)
def ball_masses(indptr, indices, lengths, weights, sources, radii):
    nsrc = sources.size
    n = indptr.size - 1
    cap = indices.size + 1
    out = np.zeros((nsrc, radii.size))
    nchunks = min(nsrc, get_num_threads() * 4)
    for c in prange(nchunks):
        dist = np.full(n, np.inf)
        settled = np.zeros(n, np.uint8)
        hd = np.empty(cap)
        hn = np.empty(cap, np.int64)
        touched = np.empty(n, np.int64)
        bins = np.zeros(radii.size + 1)
        lo = c * nsrc // nchunks
        hi = (c + 1) * nsrc // nchunks
        for si in range(lo, hi):
            _ball_masses_one(indptr, indices, lengths, weights, sources[si],
                             radii, dist, settled, hd, hn, touched, bins, out[si])
    return out


@njit(cache=True)
def _sssp_from(indptr, indices, lengths, sources, limit):
    n = indptr.size - 1
    cap = indices.size + sources.size
    dist = np.full(n, np.inf)
    settled = np.zeros(n, np.uint8)
    hd = np.empty(cap)
    hn = np.empty(cap, np.int64)
    size = 0
    for s in sources:
        dist[s] = 0.0
        size = _heap_push(hd, hn, size, 0.0, s)
    while size > 0:
        d, u, size = _heap_pop(hd, hn, size)
        if d > limit:
            break
        if settled[u]:
            continue
        settled[u] = 1
        for e in range(indptr[u], indptr[u + 1]):
            v = indices[e]
            if settled[v]:
                continue
            nd = d + lengths[e]
            if nd < dist[v] and nd <= limit:
                dist[v] = nd
                size = _heap_push(hd, hn, size, nd, v)
    # tentative values past the break are not settled shortest paths
    for u in range(n):
        if not settled[u]:
            dist[u] = np.inf
    return dist


@njit(cache=True)
def sssp(indptr, indices, lengths, source, limit):
    sources = np.empty(1, np.int64)
    sources[0] = source
    return _sssp_from(indptr, indices, lengths, sources, limit)


@njit(cache=True)
def sssp_multi(indptr, indices, lengths, sources, limit):
    return _sssp_from(indptr, indices, lengths, sources, limit)


@njit(parallel=True)
def sssp_many(indptr, indices, lengths, sources):
    nsrc = sources.size
    n = indptr.size - 1
    out = np.empty((nsrc, n))
    for si in prange(nsrc):
        src = np.empty(1, np.int64)
        src[0] = sources[si]
        out[si] = _sssp_from(indptr, indices, lengths, src, np.inf)
    return out

"""scipy.sparse.csgraph backed kernel lane (no JIT)."""

from __future__ import annotations

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

_BATCH = 128


def _graph(indptr, indices, lengths):
    n = indptr.size - 1
    return sparse.csr_matrix((lengths, indices, indptr), shape=(n, n))


def _truncate(dist, limit):
    if np.isfinite(limit):
        dist = np.where(dist > limit, np.inf, dist)
    return dist


def _scipy_limit(limit):
    # scipy's `limit` semantics at exact equality are version-dependent;
    # over-ask slightly and mask afterwards.
    if not np.isfinite(limit):
        return np.inf
    return limit * (1.0 + 1e-12) + 1e-300


def ball_masses(indptr, indices, lengths, weights, sources, radii):
    g = _graph(indptr, indices, lengths)
    rmax = radii[-1]
    out = np.zeros((sources.size, radii.size))
    nbins = radii.size + 1
    for lo in range(0, sources.size, _BATCH):
        batch = sources[lo:lo + _BATCH]
        dist = csgraph.dijkstra(g, indices=batch, limit=_scipy_limit(rmax))
        for b in range(batch.size):
            # open balls: a point at distance d belongs to every radius > d
            pos = np.searchsorted(radii, dist[b], side="right")
            bins = np.bincount(pos, weights=weights, minlength=nbins)
            out[lo + b] = np.cumsum(bins[:-1])
    return out


def sssp(indptr, indices, lengths, source, limit):
    g = _graph(indptr, indices, lengths)
    dist = csgraph.dijkstra(g, indices=source, limit=_scipy_limit(limit))
    return _truncate(dist, limit)


def sssp_multi(indptr, indices, lengths, sources, limit):
    g = _graph(indptr, indices, lengths)
    dist = csgraph.dijkstra(g, indices=sources, limit=_scipy_limit(limit), min_only=True)
    return _truncate(dist, limit)


def sssp_many(indptr, indices, lengths, sources):
    g = _graph(indptr, indices, lengths)
    out = np.empty((sources.size, indptr.size - 1))
    for lo in range(0, sources.size, _BATCH):
        batch = sources[lo:lo + _BATCH]
        out[lo:lo + batch.size] = csgraph.dijkstra(g, indices=batch)
    return out

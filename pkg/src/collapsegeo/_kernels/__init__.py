"""Shortest-path kernels with two interchangeable backends.

The hot loops of the package are radius-truncated Dijkstra sweeps over a
CSR adjacency (unit-ball mass fields need one sweep per point).  Two lanes
implement the same contract:

* ``numba`` -- hand-rolled binary-heap Dijkstra compiled with ``@njit``,
  parallel over sources.  Default when numba imports cleanly.
* ``numpy`` -- scipy.sparse.csgraph plus numpy reductions.  Pure
  interpreter-level fallback, also the reference for equivalence tests.

Selection: environment variable ``COLLAPSEGEO_KERNELS`` set to ``numba``,
``numpy`` or ``auto`` (default).  The variable is re-read on every call so
tests can flip lanes without reimporting.

Contract shared by both lanes (CSR arrays: indptr, indices, lengths must
describe a symmetric graph with positive lengths):

``ball_masses(indptr, indices, lengths, weights, sources, radii)``
    (S, R) array; entry [i, j] is the total weight of the open ball
    ``{y : d(sources[i], y) < radii[j]}``.  ``radii`` ascending.
``sssp(indptr, indices, lengths, source, limit)``
    (N,) distances; entries with d > limit are +inf.
``sssp_multi(indptr, indices, lengths, sources, limit)``
    (N,) min-over-sources distances, same truncation rule.
``sssp_many(indptr, indices, lengths, sources)``
    (S, N) full distance rows.
"""

from __future__ import annotations

import os

import numpy as np

from . import numpy_lane

_NUMBA_LANE = None
_NUMBA_FAILED = False


def _load_numba_lane():
    global _NUMBA_LANE, _NUMBA_FAILED
    if _NUMBA_LANE is None and not _NUMBA_FAILED:
        try:
            from . import numba_lane
            _NUMBA_LANE = numba_lane
        except ImportError:
            _NUMBA_FAILED = True
    return _NUMBA_LANE


def active_lane():
    """Resolve the backend module for the current environment setting."""
    choice = os.environ.get("COLLAPSEGEO_KERNELS", "auto").strip().lower()
    if choice == "numpy":
        return numpy_lane
    if choice == "numba":
        lane = _load_numba_lane()
        if lane is None:
            raise RuntimeError("COLLAPSEGEO_KERNELS=numba but numba is not importable")
        return lane
    if choice not in ("auto", ""):
        raise ValueError(f"unknown COLLAPSEGEO_KERNELS value: {choice!r}")
    lane = _load_numba_lane()
    return lane if lane is not None else numpy_lane


def active_lane_name() -> str:
    return "numba" if active_lane() is not numpy_lane else "numpy"


def _as_csr_arrays(indptr, indices, lengths):
    return (
        np.ascontiguousarray(indptr, dtype=np.int64),
        np.ascontiguousarray(indices, dtype=np.int64),
        np.ascontiguousarray(lengths, dtype=np.float64),
    )


def ball_masses(indptr, indices, lengths, weights, sources, radii):
    indptr, indices, lengths = _as_csr_arrays(indptr, indices, lengths)
    weights = np.ascontiguousarray(weights, dtype=np.float64)
    sources = np.ascontiguousarray(sources, dtype=np.int64)
    radii = np.ascontiguousarray(radii, dtype=np.float64)
    if sources.size == 0 or radii.size == 0:
        return np.zeros((sources.size, radii.size))
    return active_lane().ball_masses(indptr, indices, lengths, weights, sources, radii)


def sssp(indptr, indices, lengths, source, limit=np.inf):
    indptr, indices, lengths = _as_csr_arrays(indptr, indices, lengths)
    return active_lane().sssp(indptr, indices, lengths, int(source), float(limit))


def sssp_multi(indptr, indices, lengths, sources, limit=np.inf):
    indptr, indices, lengths = _as_csr_arrays(indptr, indices, lengths)
    sources = np.ascontiguousarray(sources, dtype=np.int64)
    if sources.size == 0:
        return np.full(indptr.size - 1, np.inf)
    return active_lane().sssp_multi(indptr, indices, lengths, sources, float(limit))


def sssp_many(indptr, indices, lengths, sources):
    indptr, indices, lengths = _as_csr_arrays(indptr, indices, lengths)
    sources = np.ascontiguousarray(sources, dtype=np.int64)
    if sources.size == 0:
        return np.zeros((0, indptr.size - 1))
    return active_lane().sssp_many(indptr, indices, lengths, sources)

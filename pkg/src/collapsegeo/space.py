"""Finite metric measure spaces with a shortest-path metric.

A space is a weighted point cloud glued by positive-length edges; the metric
is the induced shortest-path distance, with +inf across connected components
(disconnected unions are first-class citizens here).  Spaces are immutable
after construction and every operation below is read-only.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from . import _kernels as K

SPACE_SCHEMA = "cls-space-1"


class SpaceError(Exception):
    """Base error for this package."""


class ValidationError(SpaceError):
    """Malformed input data or configuration."""


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


class Space:
    """Sampled metric measure space.

    Parameters
    ----------
    weights : (N,) nonnegative point masses.
    edges : (M, 2) int array of endpoint ids plus (M,) float lengths,
        undirected, each edge listed once.
    coords : optional (N, k) chart parameters (informational).
    curvature : optional (N,) scalar curvature samples.
    basepoint : optional point id.
    mesh_fill_radius : h0, the generator's fill radius (max distance from any
        point of the underlying surface to its nearest sample).  Defaults to
        half the longest edge for hand-built spaces.
    """

    def __init__(self, weights, edge_pairs, edge_lengths, coords=None,
                 curvature=None, basepoint=None, mesh_fill_radius=None):
        self.weights = np.ascontiguousarray(weights, dtype=np.float64)
        self.weights.setflags(write=False)
        n = self.weights.size
        self.edge_pairs = np.ascontiguousarray(edge_pairs, dtype=np.int64).reshape(-1, 2)
        self.edge_lengths = np.ascontiguousarray(edge_lengths, dtype=np.float64)
        if self.edge_pairs.shape[0] != self.edge_lengths.size:
            raise ValidationError("edge pair/length count mismatch")
        if n and self.edge_pairs.size and (self.edge_pairs.min() < 0 or self.edge_pairs.max() >= n):
            raise ValidationError("edge endpoint out of range")
        if n == 0 and self.edge_pairs.size:
            raise ValidationError("edges on an empty space")
        self.coords = None if coords is None else np.ascontiguousarray(coords, dtype=np.float64)
        self.curvature = None if curvature is None else np.ascontiguousarray(curvature, dtype=np.float64)
        if self.curvature is not None and self.curvature.size != n:
            raise ValidationError("curvature array size mismatch")
        if basepoint is not None and not (0 <= int(basepoint) < n):
            raise ValidationError("basepoint out of range")
        self.basepoint = None if basepoint is None else int(basepoint)
        if mesh_fill_radius is None:
            mesh_fill_radius = 0.5 * self.edge_lengths.max() if self.edge_lengths.size else 0.0
        self.mesh_fill_radius = float(mesh_fill_radius)
        self._adj = _symmetric_csr(n, self.edge_pairs, self.edge_lengths)
        self._csr = (self._adj.indptr.astype(np.int64), self._adj.indices.astype(np.int64),
                     self._adj.data.astype(np.float64))
        # generator-attached metadata (grid layouts for canonical
        # correspondences); in-session only, never serialized
        self.meta = {}

    @property
    def n_points(self) -> int:
        return self.weights.size

    @property
    def is_empty(self) -> bool:
        return self.n_points == 0

    @property
    def total_mass(self) -> float:
        return float(self.weights.sum())

    @property
    def adjacency(self) -> sparse.csr_matrix:
        return self._adj

    @property
    def h0(self) -> float:
        return self.mesh_fill_radius

    def check_point(self, x) -> int:
        x = int(x)
        if not (0 <= x < self.n_points):
            raise ValidationError(f"unknown point id {x}")
        return x

    def __repr__(self):
        return (f"Space(n={self.n_points}, edges={self.edge_lengths.size}, "
                f"mass={self.total_mass:.6g}, h0={self.mesh_fill_radius:.4g})")


def _symmetric_csr(n, pairs, lengths) -> sparse.csr_matrix:
    if pairs.size == 0:
        return sparse.csr_matrix((n, n))
    a, b = pairs[:, 0], pairs[:, 1]
    ok = a != b  # self-loops never shorten paths; the validator reports them
    rows = np.concatenate([a[ok], b[ok]])
    cols = np.concatenate([b[ok], a[ok]])
    data = np.concatenate([lengths[ok], lengths[ok]])
    if rows.size == 0:
        return sparse.csr_matrix((n, n))
    # duplicate listings collapse to the shortest copy
    order = np.lexsort((data, cols, rows))
    r, c, d = rows[order], cols[order], data[order]
    keep = np.ones(r.size, bool)
    keep[1:] = (r[1:] != r[:-1]) | (c[1:] != c[:-1])
    mat = sparse.coo_matrix((d[keep], (r[keep], c[keep])), shape=(n, n)).tocsr()
    mat.sort_indices()
    return mat


class PointSubset:
    """Subset of a space's points, stored as a boolean mask."""

    def __init__(self, space: Space, mask):
        self.space = space
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != (space.n_points,):
            raise ValidationError("subset mask shape mismatch")
        self.mask = mask
        self.mask.setflags(write=False)

    @classmethod
    def from_indices(cls, space: Space, indices) -> "PointSubset":
        mask = np.zeros(space.n_points, bool)
        idx = np.asarray(indices, dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= space.n_points):
            raise ValidationError("subset index out of range")
        mask[idx] = True
        return cls(space, mask)

    @classmethod
    def empty(cls, space: Space) -> "PointSubset":
        return cls(space, np.zeros(space.n_points, bool))

    @classmethod
    def full(cls, space: Space) -> "PointSubset":
        return cls(space, np.ones(space.n_points, bool))

    @property
    def indices(self) -> np.ndarray:
        return np.flatnonzero(self.mask)

    @property
    def size(self) -> int:
        return int(self.mask.sum())

    def __len__(self):
        return self.size

    def __contains__(self, x) -> bool:
        return bool(self.mask[int(x)])

    def union(self, other: "PointSubset") -> "PointSubset":
        return PointSubset(self.space, self.mask | other.mask)

    def intersection(self, other: "PointSubset") -> "PointSubset":
        return PointSubset(self.space, self.mask & other.mask)

    def difference(self, other: "PointSubset") -> "PointSubset":
        return PointSubset(self.space, self.mask & ~other.mask)

    def complement(self) -> "PointSubset":
        return PointSubset(self.space, ~self.mask)

    def issubset(self, other: "PointSubset") -> bool:
        return bool(np.all(~self.mask | other.mask))

    def mass(self) -> float:
        return float(self.space.weights[self.mask].sum())

    def __eq__(self, other):
        return isinstance(other, PointSubset) and self.space is other.space \
            and np.array_equal(self.mask, other.mask)

    def __repr__(self):
        return f"PointSubset(size={self.size}/{self.space.n_points})"


# ---------------------------------------------------------------------------
# operations


def validate_space(space: Space) -> ValidationReport:
    """Report structural violations; passing report is required before analysis."""
    report = ValidationReport()
    bad_len = np.flatnonzero(~(space.edge_lengths > 0))
    for i in bad_len[:50]:
        a, b = space.edge_pairs[i]
        report.violations.append(
            f"nonpositive edge length {space.edge_lengths[i]!r} on edge ({a}, {b})")
    bad_w = np.flatnonzero(space.weights < 0)
    for i in bad_w[:50]:
        report.violations.append(f"negative weight {space.weights[i]!r} on point {i}")
    if not np.all(np.isfinite(space.weights)):
        report.violations.append("non-finite weight present")
    if space.edge_lengths.size and not np.all(np.isfinite(space.edge_lengths)):
        report.violations.append("non-finite edge length present")
    # duplicate undirected listings with conflicting lengths
    if space.edge_lengths.size:
        lo = np.minimum(space.edge_pairs[:, 0], space.edge_pairs[:, 1])
        hi = np.maximum(space.edge_pairs[:, 0], space.edge_pairs[:, 1])
        order = np.lexsort((hi, lo))
        lo, hi, ln = lo[order], hi[order], space.edge_lengths[order]
        same = (lo[1:] == lo[:-1]) & (hi[1:] == hi[:-1])
        conflict = same & (ln[1:] != ln[:-1])
        for i in np.flatnonzero(conflict)[:50]:
            report.violations.append(
                f"asymmetric adjacency: edge ({lo[i]}, {hi[i]}) listed with lengths "
                f"{ln[i]!r} and {ln[i + 1]!r}")
        selfloop = np.flatnonzero(space.edge_pairs[:, 0] == space.edge_pairs[:, 1])
        for i in selfloop[:50]:
            report.violations.append(f"self-loop on point {space.edge_pairs[i, 0]}")
    return report


def distances_from(space: Space, x, limit=np.inf) -> np.ndarray:
    """Single-source shortest-path distances; unreachable points are +inf."""
    x = space.check_point(x)
    return K.sssp(*space._csr, x, limit=limit)


def distance_rows(space: Space, sources) -> np.ndarray:
    """Stacked distance rows for several sources (shape: len(sources) x N)."""
    sources = np.asarray(sources, dtype=np.int64)
    for s in sources:
        space.check_point(s)
    return K.sssp_many(*space._csr, sources)


def ball(space: Space, x, r) -> PointSubset:
    """Open metric ball {y : d(x, y) < r}."""
    x = space.check_point(x)
    if not r > 0:
        raise ValidationError(f"ball radius must be positive, got {r}")
    d = K.sssp(*space._csr, x, limit=r)
    return PointSubset(space, d < r)


def ball_volume(space: Space, x, r) -> float:
    """Total measure of the open ball {y : d(x, y) < r}."""
    x = space.check_point(x)
    if not r > 0:
        raise ValidationError(f"ball radius must be positive, got {r}")
    masses = K.ball_masses(*space._csr, space.weights,
                           np.array([x], dtype=np.int64),
                           np.array([float(r)]))
    return float(masses[0, 0])


def ball_volumes_grid(space: Space, sources, radii) -> np.ndarray:
    """Open-ball masses for many sources at many radii (len(sources) x len(radii))."""
    sources = np.asarray(sources, dtype=np.int64)
    radii = np.asarray(radii, dtype=np.float64)
    if np.any(radii <= 0):
        raise ValidationError("radii must be positive")
    if np.any(np.diff(radii) < 0):
        raise ValidationError("radii must be ascending")
    return K.ball_masses(*space._csr, space.weights, sources, radii)


def components(space: Space, subset: PointSubset, hop_radius) -> list[PointSubset]:
    """Partition of the subset into chain-connected parts.

    Two subset points fall in the same part iff they are joined by a chain of
    subset points whose consecutive distances, measured inside the restriction
    of the adjacency graph to the subset, stay <= hop_radius.  Paths through
    points outside the subset do not connect.  Parts are ordered by their
    smallest point id.
    """
    if not hop_radius > 0:
        raise ValidationError("hop_radius must be positive")
    idx = subset.indices
    if idx.size == 0:
        return []
    sub = space.adjacency[idx][:, idx].tocoo()
    keep = sub.data <= hop_radius
    g = sparse.coo_matrix((sub.data[keep], (sub.row[keep], sub.col[keep])),
                          shape=sub.shape)
    ncomp, labels = csgraph.connected_components(g.tocsr(), directed=False)
    parts = []
    for lbl in range(ncomp):
        parts.append(PointSubset.from_indices(space, idx[labels == lbl]))
    parts.sort(key=lambda p: int(p.indices[0]))
    return parts


def set_distance(space: Space, u: PointSubset, v: PointSubset) -> float:
    """min over pairs of the full-space distance; +inf across components."""
    if u.size == 0 or v.size == 0:
        raise ValidationError("set_distance requires nonempty operands")
    inter = u.mask & v.mask
    if inter.any():
        return 0.0
    d = K.sssp_multi(*space._csr, u.indices)
    return float(d[v.mask].min())


def closure_approx(space: Space, subset: PointSubset, hop_radius) -> PointSubset:
    """Subset dilated by every point within hop_radius of it (discrete closure)."""
    if not hop_radius > 0:
        raise ValidationError("hop_radius must be positive")
    if subset.size == 0:
        return PointSubset.empty(space)
    d = K.sssp_multi(*space._csr, subset.indices, limit=hop_radius)
    return PointSubset(space, subset.mask | (d <= hop_radius))


def eccentricity(space: Space, x) -> float:
    """Largest finite distance from x (sup over x's component)."""
    d = distances_from(space, x)
    finite = d[np.isfinite(d)]
    return float(finite.max()) if finite.size else 0.0


def default_hop_radius(space: Space) -> float:
    """Three mesh fill radii: connects adjacent samples of a connected region."""
    return 3.0 * space.mesh_fill_radius


def disjoint_union(spaces: list[Space], mesh_fill_radius=None) -> Space:
    """Glue spaces side by side with no edges between them (distance +inf across)."""
    if not spaces:
        return Space(np.zeros(0), np.zeros((0, 2), np.int64), np.zeros(0),
                     mesh_fill_radius=0.0)
    weights = np.concatenate([s.weights for s in spaces])
    pair_blocks, len_blocks = [], []
    offset = 0
    for s in spaces:
        pair_blocks.append(s.edge_pairs + offset)
        len_blocks.append(s.edge_lengths)
        offset += s.n_points
    coords = None
    if all(s.coords is not None and s.coords.shape[1] == spaces[0].coords.shape[1]
           for s in spaces):
        coords = np.vstack([s.coords for s in spaces])
    curvature = None
    if all(s.curvature is not None for s in spaces):
        curvature = np.concatenate([s.curvature for s in spaces])
    h0 = mesh_fill_radius if mesh_fill_radius is not None \
        else max(s.mesh_fill_radius for s in spaces)
    return Space(weights, np.vstack(pair_blocks), np.concatenate(len_blocks),
                 coords=coords, curvature=curvature, mesh_fill_radius=h0)


def component_offsets(spaces: list[Space]) -> list[int]:
    out, offset = [], 0
    for s in spaces:
        out.append(offset)
        offset += s.n_points
    return out


# ---------------------------------------------------------------------------
# serialization (schema "cls-space-1"; floats round-trip via repr)


def space_to_json(space: Space) -> dict:
    points = []
    for i in range(space.n_points):
        rec = {"id": i}
        if space.coords is not None:
            rec["coords"] = [float(c) for c in space.coords[i]]
        rec["weight"] = float(space.weights[i])
        if space.curvature is not None:
            rec["curvature"] = float(space.curvature[i])
        points.append(rec)
    edges = [{"a": int(a), "b": int(b), "length": float(l)}
             for (a, b), l in zip(space.edge_pairs, space.edge_lengths)]
    doc = {"schema": SPACE_SCHEMA, "points": points, "edges": edges}
    if space.basepoint is not None:
        doc["basepoint"] = space.basepoint
    doc["mesh_fill_radius"] = space.mesh_fill_radius
    return doc


def space_from_json(doc: dict) -> Space:
    if doc.get("schema") != SPACE_SCHEMA:
        raise ValidationError(f"expected schema {SPACE_SCHEMA!r}, got {doc.get('schema')!r}")
    points = doc["points"]
    n = len(points)
    ids = [p["id"] for p in points]
    if ids != list(range(n)):
        raise ValidationError("point ids must be 0..N-1 in order")
    weights = np.array([p["weight"] for p in points], dtype=np.float64)
    coords = None
    if n and "coords" in points[0]:
        coords = np.array([p["coords"] for p in points], dtype=np.float64)
    curvature = None
    if n and "curvature" in points[0]:
        curvature = np.array([p.get("curvature", np.nan) for p in points], dtype=np.float64)
    edges = doc.get("edges", [])
    pairs = np.array([[e["a"], e["b"]] for e in edges], dtype=np.int64).reshape(-1, 2)
    lengths = np.array([e["length"] for e in edges], dtype=np.float64)
    return Space(weights, pairs, lengths, coords=coords, curvature=curvature,
                 basepoint=doc.get("basepoint"),
                 mesh_fill_radius=doc["mesh_fill_radius"])


def dump_document(doc: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def load_document(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def save_space(space: Space, path) -> None:
    dump_document(space_to_json(space), path)


def load_space(path) -> Space:
    return space_from_json(load_document(path))

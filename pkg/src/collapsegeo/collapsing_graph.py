"""Collapsing graphs: coarsened adjacency of thick and thin regions.

The construction stages, for thresholds lambda_+ > 1 > lambda_0 > lambda_- > 0
and a scale eps on the unit-ball volume field v:

    B = {v <= lambda_0 eps}
    C = union of components of B with v_min <= lambda_- eps
    D = C plus components of closure(M - C) with v_max <= eps
    vertices = components of D, plus components of closure(M - D)
               with v_max > lambda_+ eps

Edges follow a strict triangle rule on set distances: Z1 Z2 is an edge iff
delta(Z1, Z2) is finite and delta(Z1, Z2) < delta(Z1, Z3) + delta(Z3, Z2) for
every third vertex Z3 (with inf < inf + x false and x < inf true for finite
x; vertices in different components of the space are never adjacent since
their delta is infinite).

Vertices are classed alpha (v_min above a positivity proxy theta_alpha) or
omega; on the graph of a space that collapses only along finitely many ends,
each component is a star whose center is the alpha vertex and whose leaves
are the omega vertices.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .collapse import CollapseField
from .correspond import Correspondence
from .space import (PointSubset, Space, ValidationError, closure_approx,
                    components, default_hop_radius)

GRAPH_SCHEMA = "cls-graph-1"


@dataclass(frozen=True)
class GraphParams:
    eps: float
    lambda_minus: float = 0.25
    lambda_zero: float = 0.5
    lambda_plus: float = 2.0
    hop_radius: float | None = None    # None: 3 h0 of the space
    theta_alpha: float | None = None   # None: lambda_minus * eps / 4

    def validate(self):
        if not self.eps > 0:
            raise ValidationError("eps must be positive")
        if not (self.lambda_plus > 1.0 > self.lambda_zero > self.lambda_minus > 0.0):
            raise ValidationError("need lambda_+ > 1 > lambda_0 > lambda_- > 0")
        if self.hop_radius is not None and not self.hop_radius > 0:
            raise ValidationError("hop_radius must be positive")
        if self.theta_alpha is not None and not self.theta_alpha > 0:
            raise ValidationError("theta_alpha must be positive")

    def resolve(self, space: Space) -> "GraphParams":
        hop = self.hop_radius if self.hop_radius is not None \
            else default_hop_radius(space)
        theta = self.theta_alpha if self.theta_alpha is not None \
            else self.lambda_minus * self.eps / 4.0
        return GraphParams(self.eps, self.lambda_minus, self.lambda_zero,
                           self.lambda_plus, hop, theta)


@dataclass
class GraphVertex:
    subset: PointSubset
    v_min: float
    v_max: float
    cls: str                  # "alpha" | "omega"

    @property
    def size(self) -> int:
        return self.subset.size


@dataclass
class CollapsingGraph:
    space: Space
    params: GraphParams
    vertices: list[GraphVertex]
    edges: list[tuple[int, int]]
    delta: np.ndarray
    provenance: dict = field(default_factory=dict)

    @property
    def alpha_count(self) -> int:
        return sum(1 for v in self.vertices if v.cls == "alpha")

    def adjacency_sets(self) -> list[set]:
        adj = [set() for _ in self.vertices]
        for a, b in self.edges:
            adj[a].add(b)
            adj[b].add(a)
        return adj

    def vertex_of_point(self, point) -> int | None:
        """First vertex (in canonical order) containing the point."""
        for i, v in enumerate(self.vertices):
            if point in v.subset:
                return i
        return None

    def component_labels(self) -> np.ndarray:
        n = len(self.vertices)
        labels = np.full(n, -1)
        adj = self.adjacency_sets()
        comp = 0
        for s in range(n):
            if labels[s] >= 0:
                continue
            stack = [s]
            labels[s] = comp
            while stack:
                u = stack.pop()
                for w in adj[u]:
                    if labels[w] < 0:
                        labels[w] = comp
                        stack.append(w)
            comp += 1
        return labels


def _set_distance_matrix(space: Space, subsets: list[PointSubset]) -> np.ndarray:
    n = len(subsets)
    delta = np.zeros((n, n))
    for i in range(n):
        d = K.sssp_multi(*space._csr, subsets[i].indices)
        for j in range(n):
            if j == i:
                continue
            delta[i, j] = float(d[subsets[j].mask].min())
    # symmetrize against float asymmetries of independent sweeps
    return np.minimum(delta, delta.T)


def _edge_rule(delta: np.ndarray) -> list[tuple[int, int]]:
    n = delta.shape[0]
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            dij = delta[i, j]
            if not np.isfinite(dij):
                continue
            ok = True
            for k in range(n):
                if k == i or k == j:
                    continue
                if not dij < delta[i, k] + delta[k, j]:
                    ok = False
                    break
            if ok:
                edges.append((i, j))
    return edges


def build_graph(space: Space, fld: CollapseField, params: GraphParams) -> CollapsingGraph:
    """Run the four-stage construction and the strict-triangle edge rule."""
    params.validate()
    if fld.space is not space:
        raise ValidationError("field belongs to a different space")
    params = params.resolve(space)
    v = fld.v
    eps, hop = params.eps, params.hop_radius

    if space.is_empty:
        return CollapsingGraph(space, params, [], [], np.zeros((0, 0)),
                               {"b_size": 0, "c_size": 0, "d_size": 0})

    b_set = PointSubset(space, v <= params.lambda_zero * eps)
    c_mask = np.zeros(space.n_points, bool)
    for part in components(space, b_set, hop):
        if v[part.mask].min() <= params.lambda_minus * eps:
            c_mask |= part.mask
    c_set = PointSubset(space, c_mask)

    d_mask = c_mask.copy()
    not_c = closure_approx(space, c_set.complement(), hop) if c_mask.any() \
        else PointSubset.full(space)
    for part in components(space, not_c, hop):
        if v[part.mask].max() <= eps:
            d_mask |= part.mask
    d_set = PointSubset(space, d_mask)

    assert c_set.issubset(b_set) and c_set.issubset(d_set)

    subsets = list(components(space, d_set, hop))
    thick_parts = []
    if (~d_mask).any():
        not_d = closure_approx(space, d_set.complement(), hop)
        for part in components(space, not_d, hop):
            if v[part.mask].max() > params.lambda_plus * eps:
                thick_parts.append(part)
            # even rejected thick parts keep the space covered: points of
            # closure(M - D) outside every vertex are legal per construction
    subsets.extend(thick_parts)

    vertices = []
    for part in subsets:
        vmin = float(v[part.mask].min())
        vmax = float(v[part.mask].max())
        cls = "alpha" if vmin > params.theta_alpha else "omega"
        vertices.append(GraphVertex(part, vmin, vmax, cls))
    order = sorted(range(len(vertices)),
                   key=lambda i: (vertices[i].cls, int(vertices[i].subset.indices[0])))
    vertices = [vertices[i] for i in order]

    delta = _set_distance_matrix(space, [vtx.subset for vtx in vertices])
    edges = _edge_rule(delta)
    for a, b in edges:
        assert np.isfinite(delta[a, b]), "edge across space components"

    return CollapsingGraph(space, params, vertices, edges, delta,
                           {"b_size": b_set.size, "c_size": c_set.size,
                            "d_size": d_set.size})


# ---------------------------------------------------------------------------
# star structure


@dataclass
class StarComponentReport:
    vertex_ids: list
    alpha_count: int
    leaf_count: int
    is_star: bool
    note: str = ""


@dataclass
class StarReport:
    components: list[StarComponentReport]
    expected_leaves: list
    passed: bool

    def to_json(self):
        return {"passed": self.passed,
                "expected_leaves": list(self.expected_leaves),
                "components": [{"vertices": c.vertex_ids, "alpha_count": c.alpha_count,
                                "leaf_count": c.leaf_count, "is_star": c.is_star,
                                "note": c.note} for c in self.components]}


def star_check(graph: CollapsingGraph, expected: list[int]) -> StarReport:
    """Verify one alpha center per component, omega leaves hanging off it only,
    and leaf counts matching the expected ends per space component."""
    if not list(expected):
        raise ValidationError("expected leaf counts must be nonempty")
    labels = graph.component_labels()
    adj = graph.adjacency_sets()
    comps = []
    for comp in range(labels.max() + 1 if labels.size else 0):
        ids = [i for i in range(len(graph.vertices)) if labels[i] == comp]
        alphas = [i for i in ids if graph.vertices[i].cls == "alpha"]
        leaves = [i for i in ids if graph.vertices[i].cls == "omega"]
        note = ""
        is_star = len(alphas) == 1
        if not is_star:
            note = f"expected exactly one alpha center, found {len(alphas)}"
        else:
            center = alphas[0]
            for leaf in leaves:
                if adj[leaf] != {center}:
                    is_star = False
                    note = f"omega vertex {leaf} not hanging off the center alone"
                    break
        comps.append(StarComponentReport(ids, len(alphas), len(leaves), is_star, note))
    ok = all(c.is_star for c in comps) and \
        sorted(c.leaf_count for c in comps) == sorted(expected)
    return StarReport(comps, list(expected), ok)


# ---------------------------------------------------------------------------
# morphisms along a family


@dataclass
class MorphismReport:
    mapping: list
    edge_preserving: bool
    surjective: bool
    injective_on_alpha: bool
    unmapped: list
    fallback_markers: list
    collapsed_edges: int

    def to_json(self):
        return {"mapping": self.mapping, "edge_preserving": self.edge_preserving,
                "surjective": self.surjective,
                "injective_on_alpha": self.injective_on_alpha,
                "unmapped": self.unmapped, "fallback_markers": self.fallback_markers,
                "collapsed_edges": self.collapsed_edges}


def _marker_point(graph: CollapsingGraph, vtx: GraphVertex, fld: CollapseField):
    """Deterministic marker: alpha takes the max-v point, omega a point in the
    band (lambda_- eps / 2, lambda_- eps) at least two hops inside."""
    space = graph.space
    idx = vtx.subset.indices
    v = fld.v
    if vtx.cls == "alpha":
        return int(idx[np.argmax(v[idx])]), False
    p = graph.params
    lo, hi = p.lambda_minus * p.eps / 2.0, p.lambda_minus * p.eps
    comp = vtx.subset.complement()
    if comp.size:
        d_out = K.sssp_multi(*space._csr, comp.indices, limit=2.0 * p.hop_radius)
        inner = d_out > 2.0 * p.hop_radius
    else:
        inner = np.ones(space.n_points, bool)
    band = vtx.subset.mask & inner & (v > lo) & (v < hi)
    fallback = False
    if not band.any():
        band = vtx.subset.mask & (v > lo) & (v < hi)
        fallback = True
    if not band.any():
        band = vtx.subset.mask
        fallback = True
    cand = np.flatnonzero(band)
    return int(cand[np.argmax(v[cand])]), fallback


def graph_morphism(limit_graph: CollapsingGraph, member_graph: CollapsingGraph,
                   corr: Correspondence, limit_field: CollapseField) -> MorphismReport:
    """Map limit vertices into member vertices through marker points."""
    if corr.x is limit_graph.space and corr.y is member_graph.space:
        partner = corr.selection_map()
    elif corr.y is limit_graph.space and corr.x is member_graph.space:
        partner = corr.transpose().selection_map()
    else:
        raise ValidationError("correspondence does not relate the two graphs' spaces")
    mapping = []
    unmapped = []
    fallbacks = []
    for i, vtx in enumerate(limit_graph.vertices):
        marker, fb = _marker_point(limit_graph, vtx, limit_field)
        if fb:
            fallbacks.append(i)
        image = int(partner[marker])
        target = member_graph.vertex_of_point(image)
        mapping.append(target if target is not None else -1)
        if target is None:
            unmapped.append(i)

    edge_ok = True
    collapsed = 0
    member_edges = {tuple(sorted(e)) for e in member_graph.edges}
    for a, b in limit_graph.edges:
        fa, fb_ = mapping[a], mapping[b]
        if fa < 0 or fb_ < 0:
            edge_ok = False
            continue
        if fa == fb_:
            collapsed += 1
            edge_ok = False
            continue
        if tuple(sorted((fa, fb_))) not in member_edges:
            edge_ok = False
    hit = {m for m in mapping if m >= 0}
    surjective = hit == set(range(len(member_graph.vertices)))
    alpha_images = [mapping[i] for i, v in enumerate(limit_graph.vertices)
                    if v.cls == "alpha" and mapping[i] >= 0]
    alpha_total = sum(1 for v in limit_graph.vertices if v.cls == "alpha")
    injective = len(alpha_images) == alpha_total and \
        len(set(alpha_images)) == len(alpha_images)
    return MorphismReport(mapping=mapping, edge_preserving=edge_ok,
                          surjective=surjective, injective_on_alpha=injective,
                          unmapped=unmapped, fallback_markers=fallbacks,
                          collapsed_edges=collapsed)


# ---------------------------------------------------------------------------
# serialization (summary document; schema "cls-graph-1")


def graph_to_document(graph: CollapsingGraph) -> dict:
    p = graph.params
    return {
        "schema": GRAPH_SCHEMA,
        "vertices": [{"id": i, "class": v.cls, "size": v.size,
                      "v_min": v.v_min, "v_max": v.v_max}
                     for i, v in enumerate(graph.vertices)],
        "edges": [{"a": a, "b": b} for a, b in graph.edges],
        "params": {"eps": p.eps, "lambda_minus": p.lambda_minus,
                   "lambda_zero": p.lambda_zero, "lambda_plus": p.lambda_plus,
                   "hop_radius": p.hop_radius, "theta_alpha": p.theta_alpha},
        "provenance": dict(graph.provenance),
    }

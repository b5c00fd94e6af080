"""Builders for sampled example spaces: tori, surfaces of revolution, families.

Meshing scheme for surfaces of revolution: rows of samples at parameter
values t_i with theta-counts proportional to f(t_i) (at least 8 per circle),
cell weights equal to exact area integrals, and edges connecting every pair
of samples within a few mesh steps.  Edge lengths are the Riemannian lengths
of the straight parameter segments (Simpson quadrature), so graph distances
overestimate geodesics; the generous connection window keeps the observed
overestimate well inside 2 h0 on the closed-form checks (sphere, torus).

Rows are anchored: cell boundaries sit at anchor + m*dt for an integer key m.
Family members and their declared limits are built with a common dt and
matching anchors, so shared profile regions produce identical (key, theta)
grids; the canonical correspondences pair samples by those grid labels, the
discrete stand-in for the abstract comparison embeddings of a convergent
sequence of manifolds.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .correspond import Correspondence
from .profiles import (Profile, bulb_with_cusp_profile, chain_profile,
                       curvature_dip_profile, cusp_profile, cylinder_profile,
                       dumbbell_profile, mirror_profile, sphere_profile,
                       tube_with_ends_profile)
from .space import Space, ValidationError, disjoint_union

FAMILY_SCHEMA = "cls-family-1"

EDGE_WINDOW = 5          # connect samples within (EDGE_WINDOW + 1/2) mesh steps
MIN_CIRCLE_POINTS = 8
TORUS_RING = 5           # lattice neighbor ring radius (index norm)


# ---------------------------------------------------------------------------
# grids


@dataclass(frozen=True)
class RowSpec:
    region: str
    key: int
    t: float
    lo: float
    hi: float
    n: int
    offset: float
    start: int


@dataclass(frozen=True)
class PoleSpec:
    region: str
    end: str          # "lo" or "hi"
    t: float
    point: int


@dataclass
class RevolutionGrid:
    dt: float
    rows: list[RowSpec]
    poles: list[PoleSpec] = field(default_factory=list)

    def rows_by_region(self):
        table: dict[str, dict[int, RowSpec]] = {}
        for row in self.rows:
            table.setdefault(row.region, {})[row.key] = row
        return table


@dataclass(frozen=True)
class TorusGrid:
    a: float
    b: float
    nx: int
    ny: int


@dataclass(frozen=True)
class TorusSpec:
    a: float
    b: float

    def validate(self):
        if not (self.a > 0 and self.b > 0):
            raise ValidationError("torus periods must be positive")


def _plan_cells(lo, hi, anchor, dt):
    """Cell boundaries of width ~dt anchored at anchor + m*dt, tiling [lo, hi]."""
    min_frac = 0.25 * dt
    m_lo = math.ceil((lo + min_frac - anchor) / dt)
    m_hi = math.floor((hi - min_frac - anchor) / dt)
    inner = [anchor + m * dt for m in range(m_lo, m_hi + 1)]
    bounds = [lo] + inner + [hi]
    return bounds


def _plan_rows(profile: Profile, dt, regions):
    total = profile.total_length
    rows = []
    start = 0
    for (tag, lo, hi, anchor) in regions:
        lo_eff = lo + 0.5 * dt if (profile.closed_left and lo <= 0.0) else lo
        hi_eff = hi - 0.5 * dt if (profile.closed_right and hi >= total) else hi
        if hi_eff <= lo_eff:
            raise ValidationError("region collapsed by pole cells; resolution too coarse")
        bounds = _plan_cells(lo_eff, hi_eff, anchor, dt)
        for b0, b1 in zip(bounds[:-1], bounds[1:]):
            t = 0.5 * (b0 + b1)
            key = math.floor((t - anchor) / dt)
            f = float(profile.f(t))
            n = max(MIN_CIRCLE_POINTS, int(round(2 * math.pi * f / dt)))
            offset = 0.5 * (key % 2)
            rows.append(RowSpec(tag, key, t, b0, b1, n, offset, start))
            start += n
    return rows, start


def _default_regions(profile: Profile):
    return [("main", 0.0, profile.total_length, 0.0)]


def _pick_dt(profile: Profile, resolution, regions):
    """Bisect the mesh step so the planned point count meets the resolution."""
    def count(dt):
        try:
            rows, npts = _plan_rows(profile, dt, regions)
        except ValidationError:
            return 10 ** 12
        return npts

    area = profile.area()
    dt = math.sqrt(area / resolution)
    lo = hi = dt
    while count(lo) < resolution:
        lo *= 0.5
        if lo < 1e-8:
            break
    while count(hi) > resolution:
        hi *= 2.0
        if hi > profile.total_length:
            break
    for _ in range(48):
        mid = 0.5 * (lo + hi)
        if count(mid) > resolution:
            lo = mid
        else:
            hi = mid
    return lo if abs(count(lo) - resolution) <= abs(count(hi) - resolution) else hi


def _wrap_angle(x):
    return (x + math.pi) % (2 * math.pi) - math.pi


def _segment_length(dtt, dtheta, fs):
    """Composite-Simpson length of the straight parameter segment under
    dt^2 + f^2 dtheta^2 (five profile samples along the segment).

    The parameter segment is a curve on the surface, so with accurate
    quadrature the edge length can only overestimate the geodesic gap."""
    g = [np.sqrt(dtt * dtt + (f * dtheta) ** 2) for f in fs]
    return (g[0] + 4.0 * g[1] + 2.0 * g[2] + 4.0 * g[3] + g[4]) / 12.0


def build_revolution(profile: Profile, resolution, regions=None, dt=None,
                     basepoint=None) -> Space:
    """Sample a surface of revolution into a finite metric measure space.

    regions/dt are alignment controls used by the family builders; plain calls
    get a single region anchored at t = 0 and a mesh step fitted to the
    requested point count (must be >= 100).
    """
    profile.validate()
    if dt is None and resolution < 100:
        raise ValidationError("resolution must be at least 100")
    if regions is None:
        regions = _default_regions(profile)
    if dt is None:
        dt = _pick_dt(profile, resolution, regions)
    rows, n_row_points = _plan_rows(profile, dt, regions)
    total = profile.total_length

    poles = []
    npts = n_row_points
    if profile.closed_left:
        poles.append(PoleSpec(regions[0][0], "lo", 0.0, npts))
        npts += 1
    if profile.closed_right:
        poles.append(PoleSpec(regions[-1][0], "hi", total, npts))
        npts += 1

    weights = np.empty(npts)
    coords = np.empty((npts, 2))
    curvature = np.empty(npts)
    for row in rows:
        cell_mass = profile.area(row.lo, row.hi) / row.n
        js = np.arange(row.n)
        theta = 2 * math.pi * (js + row.offset) / row.n
        sl = slice(row.start, row.start + row.n)
        weights[sl] = cell_mass
        coords[sl, 0] = row.t
        coords[sl, 1] = theta
        curvature[sl] = float(profile.curvature(row.t))
    for pole in poles:
        if pole.end == "lo":
            weights[pole.point] = profile.area(0.0, 0.5 * dt)
        else:
            weights[pole.point] = profile.area(total - 0.5 * dt, total)
        coords[pole.point] = (pole.t, 0.0)
        curvature[pole.point] = float(profile.curvature(pole.t))

    pair_blocks, len_blocks = [], []
    # tolerant cutoff: aligned grids of different members must make identical
    # include/exclude decisions on edges that tie with the cutoff exactly
    rho_cut = (EDGE_WINDOW + 0.5) * dt * (1.0 + 1e-9)
    f_at = {row.start: float(profile.f(row.t)) for row in rows}
    for i, row in enumerate(rows):
        f0 = f_at[row.start]
        step0 = 2 * math.pi / row.n
        # intra-row arcs along the parallel circle
        arc = f0 * step0
        if row.n > 1 and arc > 0:
            kmax = min(row.n // 2, max(1, int(rho_cut / arc)))
            js = np.arange(row.n)
            for k in range(1, kmax + 1):
                other = (js + k) % row.n
                pair_blocks.append(np.stack([row.start + js, row.start + other], axis=1))
                len_blocks.append(np.full(row.n, k * arc))
        # inter-row connections
        for i2 in range(i + 1, len(rows)):
            row2 = rows[i2]
            dtt = row2.t - row.t
            if dtt > rho_cut:
                break
            budget = rho_cut * rho_cut - dtt * dtt
            if budget <= 0:
                continue
            f1 = f_at[row2.start]
            fs = [f0] + [float(profile.f(row.t + frac * dtt))
                         for frac in (0.25, 0.5, 0.75)] + [f1]
            f_lo = max(min(fs), 1e-12)
            dtheta_max = min(math.sqrt(budget) / f_lo, math.pi)
            step2 = 2 * math.pi / row2.n
            span = int(math.ceil(dtheta_max / step2)) + 1
            span = min(span, row2.n // 2 + 1)
            js = np.arange(row.n)
            theta1 = step0 * (js + row.offset)
            center = np.round(theta1 / step2 - row2.offset).astype(np.int64)
            offs = np.arange(-span, span + 1)
            j2 = (center[:, None] + offs[None, :]) % row2.n
            theta2 = step2 * (j2 + row2.offset)
            dth = _wrap_angle(theta1[:, None] - theta2)
            lengths = _segment_length(dtt, dth, fs)
            keep = lengths <= rho_cut
            a_ids = np.broadcast_to((row.start + js)[:, None], j2.shape)[keep]
            b_ids = (row2.start + j2)[keep]
            pair_blocks.append(np.stack([a_ids, b_ids], axis=1))
            len_blocks.append(lengths[keep])
    for pole in poles:
        # meridians through a smooth pole are geodesics: length is the t-gap
        for row in rows:
            gap = abs(row.t - pole.t)
            if gap <= rho_cut:
                ids = row.start + np.arange(row.n)
                pair_blocks.append(np.stack([np.full(row.n, pole.point), ids], axis=1))
                len_blocks.append(np.full(row.n, gap))
    if len(poles) == 2 and poles[1].t - poles[0].t <= rho_cut:
        pair_blocks.append(np.array([[poles[0].point, poles[1].point]]))
        len_blocks.append(np.array([poles[1].t - poles[0].t]))

    pairs = np.vstack(pair_blocks)
    lengths = np.concatenate(len_blocks)
    lo = np.minimum(pairs[:, 0], pairs[:, 1])
    hi = np.maximum(pairs[:, 0], pairs[:, 1])
    order = np.lexsort((lengths, hi, lo))
    lo, hi, lengths = lo[order], hi[order], lengths[order]
    keep = np.ones(lo.size, bool)
    keep[1:] = (lo[1:] != lo[:-1]) | (hi[1:] != hi[:-1])
    keep &= lo != hi
    pairs = np.stack([lo[keep], hi[keep]], axis=1)
    lengths = lengths[keep]

    h0 = 0.0
    for row in rows:
        h0 = max(h0, 0.5 * math.hypot(row.hi - row.lo,
                                      f_at[row.start] * 2 * math.pi / row.n))
    if poles:
        h0 = max(h0, 0.5 * dt)

    space = Space(weights, pairs, lengths, coords=coords, curvature=curvature,
                  basepoint=basepoint, mesh_fill_radius=h0)
    space.meta = {"grid": RevolutionGrid(dt=dt, rows=rows, poles=poles),
                  "kind": "revolution"}
    return space


def build_torus(spec: TorusSpec, resolution) -> Space:
    """Flat torus R^2 / (a Z x b Z) sampled on a regular grid.

    Edges carry exact flat distances for every primitive lattice offset within
    the neighbor ring, so graph distances approach the lattice-unfolding
    closed form from above.
    """
    spec.validate()
    if resolution < 100:
        raise ValidationError("resolution must be at least 100")
    a, b = float(spec.a), float(spec.b)
    nx = max(4, int(round(math.sqrt(resolution * a / b))))
    ny = max(4, int(round(resolution / nx)))
    dx, dy = a / nx, b / ny
    n = nx * ny
    ii, jj = np.divmod(np.arange(n), ny)
    coords = np.stack([(ii + 0.5) * dx, (jj + 0.5) * dy], axis=1)
    weights = np.full(n, a * b / n)
    curvature = np.zeros(n)

    pair_blocks, len_blocks = [], []
    r2 = TORUS_RING * TORUS_RING
    for di in range(0, TORUS_RING + 1):
        for dj in range(-TORUS_RING, TORUS_RING + 1):
            if di == 0 and dj <= 0:
                continue
            if di * di + dj * dj > r2 or math.gcd(di, abs(dj)) != 1:
                continue
            if di > (nx - 1) // 2 or abs(dj) > (ny - 1) // 2:
                continue
            ti = (ii + di) % nx
            tj = (jj + dj) % ny
            pair_blocks.append(np.stack([ii * ny + jj, ti * ny + tj], axis=1))
            len_blocks.append(np.full(n, math.hypot(di * dx, dj * dy)))
    pairs = np.vstack(pair_blocks)
    lengths = np.concatenate(len_blocks)
    lo = np.minimum(pairs[:, 0], pairs[:, 1])
    hi = np.maximum(pairs[:, 0], pairs[:, 1])
    order = np.lexsort((lengths, hi, lo))
    lo, hi, lengths = lo[order], hi[order], lengths[order]
    keep = np.ones(lo.size, bool)
    keep[1:] = (lo[1:] != lo[:-1]) | (hi[1:] != hi[:-1])
    pairs = np.stack([lo[keep], hi[keep]], axis=1)

    space = Space(weights, pairs, lengths[keep], coords=coords,
                  curvature=curvature, basepoint=0,
                  mesh_fill_radius=0.5 * math.hypot(dx, dy))
    space.meta = {"grid": TorusGrid(a=a, b=b, nx=nx, ny=ny), "kind": "torus"}
    return space


# ---------------------------------------------------------------------------
# closed-form oracles for the exactly solvable examples


def torus_exact_distance(a, b, p, q):
    """Flat-torus distance by lattice unfolding."""
    dx = abs(p[0] - q[0])
    dy = abs(p[1] - q[1])
    return math.hypot(min(dx, a - dx), min(dy, b - dy))


def sphere_embed(coords):
    """Embed (t, theta) samples of the unit round sphere into R^3."""
    t = coords[..., 0]
    th = coords[..., 1]
    return np.stack([np.sin(t) * np.cos(th), np.sin(t) * np.sin(th), np.cos(t)], axis=-1)


def sphere_exact_distance(c1, c2):
    """Great-circle distance between unit-sphere samples given as (t, theta).

    Uses the chord form 2 asin(|p - q| / 2), stable near coincident points."""
    p = sphere_embed(np.asarray(c1, dtype=float))
    q = sphere_embed(np.asarray(c2, dtype=float))
    chord = np.linalg.norm(p - q, axis=-1)
    return 2.0 * np.arcsin(np.clip(0.5 * chord, 0.0, 1.0))


# ---------------------------------------------------------------------------
# families


@dataclass
class FamilyConfig:
    family: str                  # torus | revolution | cusp_chain | s2_profile
    schedule: list
    resolution: int
    seed: int = 0
    limit: str | None = None     # family-specific limit tag (None = default)

    def validate(self):
        if self.family not in ("torus", "revolution", "cusp_chain", "s2_profile"):
            raise ValidationError(f"unknown family {self.family!r}")
        if not self.schedule:
            raise ValidationError("family schedule must be nonempty")
        if self.resolution < 100:
            raise ValidationError("resolution must be at least 100")

    def to_json(self):
        doc = {"schema": FAMILY_SCHEMA, "family": self.family,
               "schedule": self.schedule, "resolution": self.resolution,
               "seed": self.seed}
        if self.limit is not None:
            doc["limit"] = self.limit
        return doc

    @classmethod
    def from_json(cls, doc):
        if doc.get("schema") != FAMILY_SCHEMA:
            raise ValidationError(f"expected schema {FAMILY_SCHEMA!r}")
        cfg = cls(family=doc["family"], schedule=doc["schedule"],
                  resolution=doc["resolution"], seed=doc.get("seed", 0),
                  limit=doc.get("limit"))
        cfg.validate()
        return cfg

    def cache_key(self):
        return json.dumps(self.to_json(), sort_keys=True)


@dataclass
class FamilyMember:
    space: Space
    index: int
    corr_limit: Correspondence | None
    corr_prev: Correspondence | None
    profile: Profile | None = None


_NAMED_PROFILES = {
    "sphere": lambda p: sphere_profile(p.get("radius", 1.0)),
    "cylinder": lambda p: cylinder_profile(p["radius"], p.get("length", 1.0)),
    "cusp": lambda p: cusp_profile(p["radius"], p.get("depth", 10.0)),
    "tube": lambda p: tube_with_ends_profile(p["radius"], p.get("cylinder_length", 1.0),
                                             p.get("tail_depth", 13.2)),
    "dumbbell": lambda p: dumbbell_profile(p["neck"], p.get("blend_width", 0.05)),
    "bulb_cusp": lambda p: bulb_with_cusp_profile(p.get("tail_depth", 12.6)),
    "k_dip": lambda p: curvature_dip_profile(p.get("radius", 1.0),
                                             p.get("dip_curvature", -2.0),
                                             p.get("half_width", 0.5),
                                             p.get("pad", 1.0)),
}


def named_profile(name, params=None) -> Profile:
    if name not in _NAMED_PROFILES:
        raise ValidationError(f"unknown profile {name!r}")
    return _NAMED_PROFILES[name](params or {})


def _collar_minimum(profile: Profile) -> float:
    """Position of the (single) cosh collar minimum."""
    for k, seg in enumerate(profile.segments):
        if seg.tag == "cosh":
            return float(profile.boundaries[k] + seg.params[2])
    raise ValidationError("profile has no collar")


def _collar_minima(profile: Profile) -> list[float]:
    out = []
    for k, seg in enumerate(profile.segments):
        if seg.tag == "cosh":
            out.append(float(profile.boundaries[k] + seg.params[2]))
    return out


def _const_starts(profile: Profile) -> list[float]:
    return [float(profile.boundaries[k]) for k, seg in enumerate(profile.segments)
            if seg.tag == "const"]


# -- canonical correspondences ----------------------------------------------


def _grid_tables(space: Space):
    grid: RevolutionGrid = space.meta["grid"]
    return grid.rows_by_region(), {(p.region, p.end): p for p in grid.poles}


def _match_direction(sx: Space, sy: Space):
    rows_y, poles_y = _grid_tables(sy)
    gx: RevolutionGrid = sx.meta["grid"]
    gy: RevolutionGrid = sy.meta["grid"]
    # regions absent from the target clamp onto its rightmost region (the
    # deep end of a shorter chain / the lone piece of a one-piece limit)
    fallback_region = max(rows_y, key=lambda tag: max(r.t for r in gy.rows
                                                      if r.region == tag))
    pair_blocks = []
    for row in gx.rows:
        table = rows_y.get(row.region)
        if not table:
            table = rows_y[fallback_region]
        keys = table.keys()
        key = min(max(row.key, min(keys)), max(keys))
        target = table.get(key)
        if target is None:
            # clamp to the nearest existing key in the region
            key = min(keys, key=lambda m: (abs(m - row.key), m))
            target = table[key]
        js = np.arange(row.n)
        theta = (js + row.offset) / row.n
        j2 = np.round(theta * target.n - target.offset).astype(np.int64) % target.n
        pair_blocks.append(np.stack([row.start + js, target.start + j2], axis=1))
    for pole in gx.poles:
        mate = poles_y.get((pole.region, pole.end))
        if mate is not None:
            pair_blocks.append(np.array([[pole.point, mate.point]]))
        else:
            table = rows_y.get(pole.region) or rows_y[fallback_region]
            key = min(table.keys()) if pole.end == "lo" else max(table.keys())
            pair_blocks.append(np.array([[pole.point, table[key].start]]))
    if not pair_blocks:
        raise ValidationError("no shared grid regions between spaces")
    return np.vstack(pair_blocks)


def revolution_correspondence(sx: Space, sy: Space) -> Correspondence:
    fwd = _match_direction(sx, sy)
    back = _match_direction(sy, sx)[:, ::-1]
    return Correspondence(sx, sy, np.vstack([fwd, back]))


def torus_correspondence(sx: Space, sy: Space) -> Correspondence:
    gx: TorusGrid = sx.meta["grid"]
    gy: TorusGrid = sy.meta["grid"]

    def direction(g1, g2, swap):
        n1 = g1.nx * g1.ny
        ii, jj = np.divmod(np.arange(n1), g1.ny)
        i2 = np.round(ii * g2.nx / g1.nx).astype(np.int64) % g2.nx
        j2 = np.round(jj * g2.ny / g1.ny).astype(np.int64) % g2.ny
        pairs = np.stack([ii * g1.ny + jj, i2 * g2.ny + j2], axis=1)
        return pairs[:, ::-1] if swap else pairs

    pairs = np.vstack([direction(gx, gy, False), direction(gy, gx, True)])
    return Correspondence(sx, sy, pairs)


def canonical_correspondence(sx: Space, sy: Space) -> Correspondence:
    kx = sx.meta.get("kind")
    ky = sy.meta.get("kind")
    if kx == "torus" and ky == "torus":
        return torus_correspondence(sx, sy)
    if kx == "revolution" and ky == "revolution":
        return revolution_correspondence(sx, sy)
    raise ValidationError("no canonical correspondence between these spaces")


# -- the four families -------------------------------------------------------


def _merge_grids(spaces: list[Space]) -> RevolutionGrid:
    rows, poles = [], []
    offset = 0
    dt = spaces[0].meta["grid"].dt
    for s in spaces:
        g: RevolutionGrid = s.meta["grid"]
        for row in g.rows:
            rows.append(RowSpec(row.region, row.key, row.t, row.lo, row.hi,
                                row.n, row.offset, row.start + offset))
        for pole in g.poles:
            poles.append(PoleSpec(pole.region, pole.end, pole.t, pole.point + offset))
        offset += s.n_points
    return RevolutionGrid(dt=dt, rows=rows, poles=poles)


def _disjoint_revolution_union(pieces: list[Space]) -> Space:
    out = disjoint_union(pieces)
    out.meta = {"grid": _merge_grids(pieces), "kind": "revolution"}
    return out


class _TorusFamily:
    def __init__(self, cfg: FamilyConfig):
        self.cfg = cfg
        self._limit = _UNSET

    def member_space(self, k):
        entry = self.cfg.schedule[k]
        return build_torus(TorusSpec(entry["a"], entry["b"]), self.cfg.resolution)

    def limit_space(self):
        if self._limit is not _UNSET:
            return self._limit
        self._limit = self._build_limit()
        return self._limit

    def _build_limit(self):
        tag = self.cfg.limit or "empty"
        if tag != "empty":
            raise ValidationError(f"unknown torus family limit {tag!r}")
        return Space(np.zeros(0), np.zeros((0, 2), np.int64), np.zeros(0),
                     mesh_fill_radius=0.0)

    def corr_limit(self, member, limit):
        return None  # the declared limit is the empty manifold

    def corr_prev(self, member, prev):
        return torus_correspondence(member, prev)


class _S2Family:
    """Rotationally symmetric metrics on the 2-sphere: dumbbells with a
    pinching (or alternating) collar."""

    def __init__(self, cfg: FamilyConfig):
        self.cfg = cfg
        self._dt = None
        self._limit = _UNSET

    def _member_profile(self, k):
        return dumbbell_profile(self.cfg.schedule[k]["neck"])

    def _regions(self, profile):
        c = _collar_minimum(profile)
        total = profile.total_length
        return [("left", 0.0, c, 0.0), ("right", c, total, total)]

    def dt(self):
        if self._dt is None:
            prof = self._member_profile(0)
            self._dt = _pick_dt(prof, self.cfg.resolution, self._regions(prof))
        return self._dt

    def member_space(self, k):
        prof = self._member_profile(k)
        return build_revolution(prof, self.cfg.resolution,
                                regions=self._regions(prof), dt=self.dt())

    def member_profile(self, k):
        return self._member_profile(k)

    def limit_space(self):
        if self._limit is not _UNSET:
            return self._limit
        self._limit = self._build_limit()
        return self._limit

    def _build_limit(self):
        tag = self.cfg.limit or "two_pieces"
        left = bulb_with_cusp_profile()
        pieces = []
        if tag in ("two_pieces", "one_piece"):
            p1 = build_revolution(left, self.cfg.resolution,
                                  regions=[("left", 0.0, left.total_length, 0.0)],
                                  dt=self.dt())
            pieces.append(p1)
        if tag == "two_pieces":
            right = mirror_profile(left)
            p2 = build_revolution(right, self.cfg.resolution,
                                  regions=[("right", 0.0, right.total_length,
                                            right.total_length)],
                                  dt=self.dt())
            pieces.append(p2)
        if not pieces:
            raise ValidationError(f"unknown s2 family limit {tag!r}")
        return _disjoint_revolution_union(pieces) if len(pieces) > 1 else pieces[0]

    def corr_limit(self, member, limit):
        return revolution_correspondence(member, limit)

    def corr_prev(self, member, prev):
        return revolution_correspondence(member, prev)


class _ChainFamily:
    """Chains of two-ended tubes with vanishing collar necks."""

    def __init__(self, cfg: FamilyConfig):
        self.cfg = cfg
        self._dt = None
        self._limit = _UNSET

    def _entry(self, k):
        e = self.cfg.schedule[k]
        return list(e["radii"]), list(e["necks"]), e.get("cylinder_length", 1.0), \
            e.get("tail_depth", 12.0)

    def _member_profile(self, k):
        radii, necks, cyl, tail = self._entry(k)
        return chain_profile(radii, necks, cyl, tail)

    def member_profile(self, k):
        return self._member_profile(k)

    def _regions(self, profile, piece_count):
        minima = _collar_minima(profile)
        starts = _const_starts(profile)
        bounds = [0.0] + minima + [profile.total_length]
        return [(f"p{i}", bounds[i], bounds[i + 1], starts[i])
                for i in range(piece_count)]

    def dt(self):
        if self._dt is None:
            k = len(self.cfg.schedule) - 1
            prof = self._member_profile(k)
            radii, _, _, _ = self._entry(k)
            self._dt = _pick_dt(prof, self.cfg.resolution,
                                self._regions(prof, len(radii)))
        return self._dt

    def member_space(self, k):
        prof = self._member_profile(k)
        radii, _, _, _ = self._entry(k)
        return build_revolution(prof, self.cfg.resolution,
                                regions=self._regions(prof, len(radii)),
                                dt=self.dt())

    def limit_space(self):
        if self._limit is not _UNSET:
            return self._limit
        self._limit = self._build_limit()
        return self._limit

    def _build_limit(self):
        tag = self.cfg.limit or "pieces"
        if tag != "pieces":
            raise ValidationError(f"unknown chain family limit {tag!r}")
        radii, _, cyl, tail = self._entry(len(self.cfg.schedule) - 1)
        pieces = []
        for i, r in enumerate(radii):
            prof = tube_with_ends_profile(r, cyl, tail)
            start = _const_starts(prof)[0]
            piece = build_revolution(prof, self.cfg.resolution,
                                     regions=[(f"p{i}", 0.0, prof.total_length, start)],
                                     dt=self.dt())
            pieces.append(piece)
        return _disjoint_revolution_union(pieces)

    def corr_limit(self, member, limit):
        return revolution_correspondence(member, limit)

    def corr_prev(self, member, prev):
        return revolution_correspondence(member, prev)


class _RevolutionFamily:
    """Generic schedule of named profiles (no declared limit)."""

    def __init__(self, cfg: FamilyConfig):
        self.cfg = cfg

    def _member_profile(self, k):
        entry = dict(self.cfg.schedule[k])
        return named_profile(entry.pop("profile"), entry)

    def member_profile(self, k):
        return self._member_profile(k)

    def member_space(self, k):
        return build_revolution(self._member_profile(k), self.cfg.resolution)

    def limit_space(self):
        return None

    def corr_limit(self, member, limit):
        return None

    def corr_prev(self, member, prev):
        return None


_UNSET = object()

_FAMILIES = {"torus": _TorusFamily, "s2_profile": _S2Family,
             "cusp_chain": _ChainFamily, "revolution": _RevolutionFamily}


@lru_cache(maxsize=8)
def _family_impl(cache_key):
    cfg = FamilyConfig.from_json(json.loads(cache_key))
    return _FAMILIES[cfg.family](cfg)


def family_impl(cfg: FamilyConfig):
    cfg.validate()
    return _family_impl(cfg.cache_key())


def build_family_limit(cfg: FamilyConfig):
    """The family's declared limit space (may be empty or None for generic runs)."""
    return family_impl(cfg).limit_space()


def build_family_member(cfg: FamilyConfig, k) -> FamilyMember:
    impl = family_impl(cfg)
    if not (0 <= k < len(cfg.schedule)):
        raise ValidationError(f"member index {k} outside schedule")
    space = impl.member_space(k)
    limit = impl.limit_space()
    corr_limit = None
    if limit is not None and not limit.is_empty:
        corr_limit = impl.corr_limit(space, limit)
    corr_prev = None
    if k > 0:
        prev = impl.member_space(k - 1)
        corr_prev = impl.corr_prev(space, prev)
    profile = impl.member_profile(k) if hasattr(impl, "member_profile") else None
    return FamilyMember(space=space, index=k, corr_limit=corr_limit,
                        corr_prev=corr_prev, profile=profile)

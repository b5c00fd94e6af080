"""Shared fixtures: hand-built micro spaces plus session-cached generated ones."""

from __future__ import annotations

import time

import numpy as np
import pytest

from collapsegeo import harness
from collapsegeo.generators import TorusSpec, build_revolution, build_torus
from collapsegeo.profiles import sphere_profile
from collapsegeo.space import Space


def make_space(weights, edges, **kw):
    """edges: list of (a, b, length)."""
    edges = list(edges)
    pairs = np.array([(a, b) for a, b, _ in edges], dtype=np.int64).reshape(-1, 2)
    lens = np.array([l for _, _, l in edges], dtype=float)
    kw.setdefault("mesh_fill_radius", 0.5)
    return Space(np.asarray(weights, dtype=float), pairs, lens, **kw)


def plane_cloud_space(points, weights=None, mesh_fill_radius=0.05):
    """Complete graph over plane points with Euclidean lengths (tiny instances)."""
    pts = np.asarray(points, dtype=float)
    n = len(pts)
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            edges.append((i, j, float(np.linalg.norm(pts[i] - pts[j]))))
    w = np.ones(n) if weights is None else np.asarray(weights, dtype=float)
    return make_space(w, edges, coords=pts, mesh_fill_radius=mesh_fill_radius)


def circle_space(n, circumference, basepoint=None):
    step = circumference / n
    edges = [(i, (i + 1) % n, step) for i in range(n)]
    coords = np.stack([np.arange(n) * step, np.zeros(n)], axis=1)
    return make_space(np.full(n, step), edges, coords=coords,
                      mesh_fill_radius=step / 2, basepoint=basepoint)


@pytest.fixture(scope="session")
def sphere20k():
    return build_revolution(sphere_profile(), 20000)


@pytest.fixture(scope="session")
def sphere4k():
    return build_revolution(sphere_profile(), 4000)


@pytest.fixture(scope="session")
def square_torus():
    return build_torus(TorusSpec(1.0, 1.0), 12000)


@pytest.fixture(scope="session")
def thin_torus_distance():
    """a=1, b=0.1 at 10k points: the closed-form distance check instance."""
    return build_torus(TorusSpec(1.0, 0.1), 10000)


@pytest.fixture(scope="session")
def thin_torus_nu():
    """a=1, b=0.05: the collapsed-nu bound instance."""
    return build_torus(TorusSpec(1.0, 0.05), 2500)


@pytest.fixture(scope="session")
def preset_runs(tmp_path_factory):
    """Run every shipped preset once; record wall time for the runtime gate."""
    root = tmp_path_factory.mktemp("presets")
    out = {}
    t0 = time.time()
    for name in harness.preset_names():
        out[name] = harness.run_experiment(harness.preset(name),
                                           str(root / name))
    elapsed = time.time() - t0
    return {"handles": out, "elapsed": elapsed, "root": root}

#!/usr/bin/env python3
"""Benchmark the numba kernel lane against the numpy/scipy fallback.

The hot loop of the package is the radius-truncated Dijkstra sweep behind
unit-ball volume fields (one sweep per point).  This script times that sweep
plus plain distance rows on a generated sphere in both lanes and checks that
they agree.

Usage:
    python benchmarks/bench_kernels.py [--points 6000] [--repeat 2]
"""

import argparse
import os
import time

import numpy as np


def run_lane(lane, space, radii, sources, repeat):
    os.environ["COLLAPSEGEO_KERNELS"] = lane
    from collapsegeo import _kernels as K
    assert K.active_lane_name() == lane
    # warm up (JIT compilation for the numba lane)
    K.ball_masses(*space._csr, space.weights, sources[:8], radii)
    K.sssp_many(*space._csr, sources[:8])

    best_masses = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        masses = K.ball_masses(*space._csr, space.weights, sources, radii)
        best_masses = min(best_masses, time.perf_counter() - t0)

    best_rows = np.inf
    row_sources = sources[:128]
    for _ in range(repeat):
        t0 = time.perf_counter()
        rows = K.sssp_many(*space._csr, row_sources)
        best_rows = min(best_rows, time.perf_counter() - t0)
    return masses, best_masses, rows, best_rows


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--points", type=int, default=6000)
    ap.add_argument("--repeat", type=int, default=2)
    args = ap.parse_args()

    from collapsegeo.generators import build_revolution
    from collapsegeo.profiles import sphere_profile

    space = build_revolution(sphere_profile(), args.points)
    radii = np.append(np.geomspace(4 * space.mesh_fill_radius, 1 - 1e-3, 64), 1.0)
    sources = np.arange(space.n_points, dtype=np.int64)
    print(f"sphere sample: {space.n_points} points, "
          f"{space.edge_lengths.size} edges, 65 radii, all sources")

    results = {}
    lanes = ["numpy"]
    try:
        import numba  # noqa: F401
        lanes.append("numba")
    except ImportError:
        print("numba not importable; benchmarking the numpy lane only")
    for lane in lanes:
        masses, t_masses, rows, t_rows = run_lane(lane, space, radii,
                                                  sources, args.repeat)
        results[lane] = (masses, t_masses, rows, t_rows)
        print(f"{lane:>6}: ball_masses {t_masses:8.2f}s   "
              f"sssp_many(128) {t_rows:6.2f}s")

    if len(results) == 2:
        m_np, _, r_np, _ = results["numpy"]
        m_nb, t_nb, r_nb, _ = results["numba"]
        assert np.allclose(m_np, m_nb, rtol=1e-12, atol=1e-14), "lanes disagree"
        assert np.allclose(r_np, r_nb, rtol=1e-12, atol=1e-14), "lanes disagree"
        speed = results["numpy"][1] / t_nb
        print(f"lanes agree to 1e-12; numba speedup x{speed:.2f} "
              f"(scales with cores: the numba lane is parallel over sources)")


if __name__ == "__main__":
    main()

"""GH certification, heuristic bounds, measured transport, convergence checks."""

import itertools
import math

import numpy as np
import pytest

from collapsegeo.collapse import v_field
from collapsegeo.correspond import (Correspondence, correspondence_from_map,
                                    identity_correspondence)
from collapsegeo.generators import (FamilyConfig, TorusSpec,
                                    build_family_limit, build_family_member,
                                    build_torus, torus_correspondence)
from collapsegeo.gh import (SizeCapError, _full_matrix, _pairs_distortion,
                            epsilon_isometry_check, gh_exact, gh_upper,
                            measured_gh, pointed_gh, volume_exhausted_check)
from collapsegeo.space import ValidationError

from conftest import circle_space, plane_cloud_space


def brute_gh(x, y):
    """True GH distance by enumerating every covering relation (tiny inputs)."""
    DX, _ = _full_matrix(x)
    DY, _ = _full_matrix(y)
    m, n = DX.shape[0], DY.shape[0]
    cells = list(itertools.product(range(m), range(n)))
    best = math.inf
    for bits in range(1, 1 << len(cells)):
        rel = [cells[i] for i in range(len(cells)) if bits >> i & 1]
        if len({a for a, _ in rel}) < m or len({b for _, b in rel}) < n:
            continue
        xs = np.array([a for a, _ in rel])
        ys = np.array([b for _, b in rel])
        best = min(best, _pairs_distortion(DX, DY, xs, ys))
    return best / 2.0


def test_two_point_gap_formula():
    a = plane_cloud_space([[0, 0], [1, 0]])
    b = plane_cloud_space([[0, 0], [2, 0]])
    assert gh_exact(a, b).upper == pytest.approx(0.5, abs=1e-15)


def test_identity_zero():
    a = plane_cloud_space([[0, 0], [1, 0], [0.3, 0.8]])
    est = gh_exact(a, a)
    assert est.upper == 0.0 and est.lower == 0.0 and est.mode == "exact"


def test_point_vs_diameter():
    a = plane_cloud_space([[0, 0]])
    b = plane_cloud_space([[0, 0], [3, 0], [1.5, 1.2]])
    assert gh_exact(a, b).upper == pytest.approx(1.5, abs=1e-12)


def test_exact_matches_full_enumeration():
    rng = np.random.default_rng(7)
    for _ in range(4):
        x = plane_cloud_space(rng.random((3, 2)))
        y = plane_cloud_space(rng.random((3, 2)))
        assert gh_exact(x, y).upper == pytest.approx(brute_gh(x, y), abs=1e-12)


def test_size_cap():
    pts = np.random.default_rng(0).random((9, 2))
    x = plane_cloud_space(pts)
    y = plane_cloud_space(pts)
    with pytest.raises(SizeCapError):
        gh_exact(x, y)


def test_exact_symmetry_and_diameter_lower_bound():
    rng = np.random.default_rng(8)
    for _ in range(5):
        x = plane_cloud_space(rng.random((4, 2)) * 2)
        y = plane_cloud_space(rng.random((5, 2)))
        dxy = gh_exact(x, y).upper
        assert dxy == pytest.approx(gh_exact(y, x).upper, abs=1e-12)
        DX, _ = _full_matrix(x)
        DY, _ = _full_matrix(y)
        assert dxy >= abs(DX.max() - DY.max()) / 2 - 1e-12


def test_triangle_inequality_on_triples():
    rng = np.random.default_rng(9)
    for _ in range(20):
        x = plane_cloud_space(rng.random((rng.integers(2, 6), 2)))
        y = plane_cloud_space(rng.random((rng.integers(2, 6), 2)))
        z = plane_cloud_space(rng.random((rng.integers(2, 6), 2)))
        dxy, dyz, dxz = (gh_exact(*pair).upper
                         for pair in ((x, y), (y, z), (x, z)))
        assert dxz <= dxy + dyz + 1e-12
        assert dxy <= dxz + dyz + 1e-12
        assert dyz <= dxy + dxz + 1e-12


def test_upper_never_below_exact():
    rng = np.random.default_rng(10)
    for _ in range(50):
        x = plane_cloud_space(rng.random((rng.integers(2, 7), 2)))
        y = plane_cloud_space(rng.random((rng.integers(2, 7), 2)))
        if x.n_points * y.n_points > 64:
            continue
        assert gh_upper(x, y).upper >= gh_exact(x, y).upper - 1e-12


def test_upper_identity_zero():
    sp = circle_space(160, 1.0)
    assert gh_upper(sp, sp).upper == 0.0


def test_scaled_circles_bound():
    # parameter matching is one of the seeds, so the certificate can't be
    # worse than the analytic matching distortion
    c1 = circle_space(200, 1.0)
    c2 = circle_space(200, 1.1)
    est = gh_upper(c1, c2, effort=3)
    assert est.upper <= 0.06
    assert est.lower <= est.upper


def test_pointed_single_points():
    a = circle_space(40, 4.0, basepoint=0)
    b = circle_space(60, 4.0, basepoint=0)
    est = pointed_gh(a, 0, b, 0, 0.05)
    assert est.upper == 0.0


def test_pointed_same_space_zero():
    a = circle_space(24, 3.0, basepoint=0)
    est = pointed_gh(a, 0, a, 0, 0.8)
    assert est.upper == pytest.approx(0.0, abs=1e-12)


def test_pointed_thin_torus_vs_circle():
    torus = build_torus(TorusSpec(1.0, 0.1), 2000)
    circle = circle_space(200, 1.0, basepoint=0)
    est = pointed_gh(torus, 0, circle, 0, 0.25, effort=4)
    assert est.mode == "heuristic"
    assert est.upper <= 0.1 / 2 + 2 * torus.h0


def test_measured_identity_zero(thin_torus_nu):
    rep = measured_gh(thin_torus_nu, thin_torus_nu,
                      identity_correspondence(thin_torus_nu))
    assert rep.distortion == 0.0 and rep.transport_cost == 0.0
    assert rep.mass_defect == 0.0


def test_measured_single_move_bound():
    pts = [[0, 0], [1, 0], [0, 1], [1, 1]]
    x = plane_cloud_space(pts)
    w = np.ones(4)
    w[0] -= 0.25
    w[3] += 0.25
    y = plane_cloud_space(pts, weights=w)
    ids = np.arange(4, dtype=np.int64)
    corr = Correspondence(x, y, np.stack([ids, ids], axis=1))
    rep = measured_gh(x, y, corr)
    assert rep.mode == "exact"
    assert rep.mass_defect == pytest.approx(0.0, abs=1e-12)
    # optimal plan ships 0.25 from point 3 to point 0 at distance sqrt(2)
    assert rep.transport_cost == pytest.approx(0.25 * math.sqrt(2), abs=1e-9)


def test_measured_collapsing_defect():
    x = build_torus(TorusSpec(1.0, 0.2), 500)
    y = build_torus(TorusSpec(1.0, 0.1), 500)
    rep = measured_gh(x, y, torus_correspondence(x, y))
    assert rep.mass_defect == pytest.approx(0.1, abs=1e-12)


def test_eps_isometry_identity_and_constant(thin_torus_nu):
    n = thin_torus_nu.n_points
    ok = epsilon_isometry_check(thin_torus_nu, thin_torus_nu,
                                np.arange(n), 0.01, anchors=64)
    assert ok.passed
    bad = epsilon_isometry_check(thin_torus_nu, thin_torus_nu,
                                 np.zeros(n, dtype=np.int64), 0.2, anchors=64)
    assert not bad.passed


def test_correspondence_to_map_is_isometry_above_distortion():
    x = circle_space(60, 2.0)
    y = circle_space(90, 2.1)
    est = gh_upper(x, y, effort=3)
    corr = Correspondence(x, y, est.certificate_pairs_global())
    delta = corr.distortion_report(anchors=None).distortion
    verdict = epsilon_isometry_check(x, y, corr.selection_map(),
                                     delta + 1e-9)
    assert verdict.passed


def test_correspondence_validation():
    x = circle_space(8, 1.0)
    y = circle_space(6, 1.0)
    with pytest.raises(ValidationError):
        Correspondence(x, y, [[0, 0]])
    full = correspondence_from_map(x, y, np.zeros(8, dtype=np.int64))
    assert len(full) >= 8


def test_vex_constant_sequence(thin_torus_nu):
    sp = thin_torus_nu
    corr = identity_correspondence(sp)
    rep = volume_exhausted_check([sp, sp], [corr, corr], sp, [0.005, 0.01])
    for eps in (0.005, 0.01):
        assert rep.coverage_start(eps) == 0
        assert rep.distortions(eps) == [0.0, 0.0]


def test_vex_empty_limit_vacuous():
    cfg = FamilyConfig("torus", [{"a": 1.0, "b": 0.4}, {"a": 1.0, "b": 0.1}],
                       resolution=600)
    members = [build_family_member(cfg, k).space for k in range(2)]
    limit = build_family_limit(cfg)
    rep = volume_exhausted_check(members, None, limit, [0.1])
    entries = rep.entries_for(0.1)
    assert not entries[0].covered          # b=0.4 still thick somewhere
    assert entries[1].covered              # fully collapsed member
    assert rep.coverage_start(0.1) == 1


def test_vex_weak_fallback_flag():
    x = circle_space(30, 1.0)
    y = circle_space(24, 1.05)
    rep = volume_exhausted_check([x], None, y, [1e-9], anchors=16)
    assert rep.weak_verification


def test_upper_deterministic_per_seed_and_effort():
    x = circle_space(90, 1.0)
    y = circle_space(70, 1.3)
    a = gh_upper(x, y, effort=4, seed=3)
    b = gh_upper(x, y, effort=4, seed=3)
    assert a.upper == b.upper
    assert np.array_equal(a.pairs, b.pairs)


def test_vex_pointed_mode(thin_torus_nu):
    sp = thin_torus_nu  # basepoint 0 from the torus builder
    corr = identity_correspondence(sp)
    rep = volume_exhausted_check([sp], [corr], sp, [0.005], pointed_radius=0.3)
    assert rep.pointed_radius == 0.3
    entry = rep.entries_for(0.005)[0]
    assert entry.covered and entry.distortion == 0.0
    assert entry.thick_size < int((v_field(sp).nu > 0.005).sum())

"""Profile segments: closed-form curvature, areas, blending, mirroring."""

import math

import numpy as np
import pytest

from collapsegeo.profiles import (Profile, Segment, bulb_with_cusp_profile,
                                  chain_profile, curvature_dip_profile,
                                  cusp_profile, cylinder_profile,
                                  dumbbell_profile, gauss_curvature,
                                  insert_blends, mirror_profile,
                                  sphere_profile, tube_with_ends_profile)
from collapsegeo.space import ValidationError


def test_curvature_identities():
    assert gauss_curvature(sphere_profile(), 0.7) == pytest.approx(1.0)
    assert gauss_curvature(cusp_profile(0.3, 5.0), 2.0) == pytest.approx(-1.0)
    assert gauss_curvature(cylinder_profile(0.5, 2.0), 1.0) == pytest.approx(0.0)


def test_curvature_outside_domain():
    with pytest.raises(ValidationError):
        gauss_curvature(sphere_profile(), 4.0)


def test_sphere_area():
    assert sphere_profile().area() == pytest.approx(4 * math.pi, rel=1e-12)


def test_cusp_area_closed_form():
    prof = cusp_profile(0.7, 9.0)
    assert prof.area() == pytest.approx(2 * math.pi * 0.7 * (1 - math.exp(-9.0)),
                                        rel=1e-12)


def test_numeric_second_derivative_matches_tagged_curvature():
    # K = -f''/f checked by finite differences on every segment type
    prof = curvature_dip_profile()
    h = 1e-5
    for t in np.linspace(0.2, prof.total_length - 0.2, 37):
        f0 = float(prof.f(t))
        fpp = float((prof.f(t + h) - 2 * f0 + prof.f(t - h)) / h ** 2)
        assert float(prof.curvature(t)) == pytest.approx(-fpp / f0, abs=5e-4)


def test_tube_curvature_within_unit_band():
    prof = tube_with_ends_profile(0.4)
    ts = np.linspace(1e-9, prof.total_length - 1e-9, 4001)
    K = prof.curvature(ts)
    assert K.min() >= -1.0 - 1e-9
    assert K.max() <= 1.0 + 1e-9


def test_chain_profile_c1_and_curvature():
    prof = chain_profile([0.05, 0.025], [0.001])
    prof.validate()
    ts = np.linspace(1e-9, prof.total_length - 1e-9, 4001)
    K = prof.curvature(ts)
    assert K.min() >= -1.0 - 1e-9 and K.max() <= 1.0 + 1e-9
    # log-derivative continuity at every join (the construction is exactly C^1)
    for b in prof.boundaries[1:-1]:
        u_left = float(prof.fprime(b - 1e-9) / prof.f(b - 1e-9))
        u_right = float(prof.fprime(b + 1e-9) / prof.f(b + 1e-9))
        assert u_left == pytest.approx(u_right, abs=1e-6)


def test_dumbbell_closed_poles():
    prof = dumbbell_profile(0.01)
    prof.validate()
    assert float(prof.f(0.0)) == pytest.approx(0.0, abs=1e-12)
    assert abs(float(prof.fprime(0.0))) == pytest.approx(1.0, abs=1e-12)


def test_blend_requires_value_continuity():
    segs = [Segment("const", 1.0, (1.0,)), Segment("const", 1.0, (2.0,))]
    with pytest.raises(ValidationError):
        insert_blends(Profile(segs), 0.1)


def test_blend_smooths_slope_kink():
    # cylinder meeting a shallow cone-like sin shoulder: value continuous,
    # slopes differ; the blend restores C^1 within the window
    segs = [Segment("const", 1.0, (math.sin(1.0),)),
            Segment("sin", 0.5, (1.0, 1.0))]
    prof = insert_blends(Profile(segs), 0.1)
    assert any(s.tag == "blend" for s in prof.segments)
    prof.validate()
    b = prof.boundaries[1]
    u_left = float(prof.fprime(b - 1e-9) / prof.f(b - 1e-9))
    u_right = float(prof.fprime(b + 1e-9) / prof.f(b + 1e-9))
    assert u_left == pytest.approx(u_right, abs=1e-6)


def test_mirror_profile_pointwise():
    prof = bulb_with_cusp_profile(tail_depth=3.0)
    mirrored = mirror_profile(prof)
    ts = np.linspace(0, prof.total_length, 257)
    assert np.allclose(mirrored.f(prof.total_length - ts), prof.f(ts), atol=1e-12)
    assert np.allclose(mirrored.curvature(prof.total_length - ts),
                       prof.curvature(ts), atol=1e-9)
    assert mirrored.closed_right and not mirrored.closed_left


def test_area_additivity():
    prof = dumbbell_profile(0.02)
    mid = prof.total_length / 3
    total = prof.area(0, mid) + prof.area(mid, prof.total_length)
    assert total == pytest.approx(prof.area(), rel=1e-10)


def test_dip_profile_band_value():
    prof = curvature_dip_profile(dip_curvature=-2.0)
    ts = np.linspace(0, prof.total_length, 2001)
    K = prof.curvature(ts)
    assert K.min() == pytest.approx(-2.0, abs=1e-9)
    # the blends flanking the band curve upward, never below the floor
    band = [s for s in prof.segments if s.tag == "cosh"][0]
    others = K[(K > -1.999) & (K < -1e-9)]
    assert others.min() > -1.0 if others.size else True

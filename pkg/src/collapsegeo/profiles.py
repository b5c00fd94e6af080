"""Piecewise profiles f(t) > 0 of surfaces of revolution.

A profile describes the warped-product metric dt^2 + f(t)^2 dtheta^2 with t
arclength along the meridian; its Gauss curvature is K = -f''/f.  Each
segment tag carries that identity in closed form, so curvature evaluation
never divides by f (which vanishes at poles):

    sin    f = A sin(p0 + s/A)            K = 1/A^2
    const  f = r                          K = 0
    exp    f = a e^{+-s}                  K = -1
    cosh   f = m cosh(rho (s - s0))       K = -rho^2   (collar / curvature dip)
    sech   f = M sech(s - s0)             K = 1 - 2 tanh^2(s - s0)
    blend  ln f cubic in s                K = -(H'' + H'^2), H = ln f

The sech shoulder joins a flat cylinder top (f'/f = 0) to an exponential
end (f'/f = -1) while keeping K inside [-1, 1]; exp/cosh/sech pieces meet
each other with matching f and f' wherever the log-derivatives agree, which
the builders below arrange exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .space import ValidationError

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(24)


@dataclass(frozen=True)
class Segment:
    tag: str
    length: float
    params: tuple

    def f(self, s):
        s = np.asarray(s, dtype=float)
        if self.tag == "sin":
            amp, p0 = self.params
            return amp * np.sin(p0 + s / amp)
        if self.tag == "const":
            return np.full_like(s, self.params[0])
        if self.tag == "exp":
            a, sign = self.params
            return a * np.exp(sign * s)
        if self.tag == "cosh":
            m, rho, s0 = self.params
            return m * np.cosh(rho * (s - s0))
        if self.tag == "sech":
            big, s0 = self.params
            return big / np.cosh(s - s0)
        if self.tag == "blend":
            c0, c1, c2, c3 = self.params
            return np.exp(c0 + s * (c1 + s * (c2 + s * c3)))
        raise ValidationError(f"unknown segment tag {self.tag!r}")

    def fprime(self, s):
        s = np.asarray(s, dtype=float)
        if self.tag == "sin":
            amp, p0 = self.params
            return np.cos(p0 + s / amp)
        if self.tag == "const":
            return np.zeros_like(s)
        if self.tag == "exp":
            a, sign = self.params
            return sign * a * np.exp(sign * s)
        if self.tag == "cosh":
            m, rho, s0 = self.params
            return m * rho * np.sinh(rho * (s - s0))
        if self.tag == "sech":
            big, s0 = self.params
            return -big * np.tanh(s - s0) / np.cosh(s - s0)
        if self.tag == "blend":
            c0, c1, c2, c3 = self.params
            h1 = c1 + s * (2 * c2 + 3 * c3 * s)
            return h1 * self.f(s)
        raise ValidationError(f"unknown segment tag {self.tag!r}")

    def curvature(self, s):
        s = np.asarray(s, dtype=float)
        if self.tag == "sin":
            amp, _ = self.params
            return np.full_like(s, 1.0 / amp ** 2)
        if self.tag == "const":
            return np.zeros_like(s)
        if self.tag == "exp":
            return np.full_like(s, -1.0)
        if self.tag == "cosh":
            _, rho, _ = self.params
            return np.full_like(s, -rho ** 2)
        if self.tag == "sech":
            _, s0 = self.params
            return 1.0 - 2.0 * np.tanh(s - s0) ** 2
        if self.tag == "blend":
            _, c1, c2, c3 = self.params
            h1 = c1 + s * (2 * c2 + 3 * c3 * s)
            h2 = 2 * c2 + 6 * c3 * s
            return -(h2 + h1 ** 2)
        raise ValidationError(f"unknown segment tag {self.tag!r}")

    def area(self, s0, s1):
        """Closed-form integral of 2 pi f over [s0, s1] (local coordinates)."""
        if self.tag == "sin":
            amp, p0 = self.params
            val = amp * amp * (math.cos(p0 + s0 / amp) - math.cos(p0 + s1 / amp))
        elif self.tag == "const":
            val = self.params[0] * (s1 - s0)
        elif self.tag == "exp":
            a, sign = self.params
            val = a * (math.exp(sign * s1) - math.exp(sign * s0)) / sign
        elif self.tag == "cosh":
            m, rho, sc = self.params
            val = m / rho * (math.sinh(rho * (s1 - sc)) - math.sinh(rho * (s0 - sc)))
        elif self.tag == "sech":
            big, sc = self.params
            val = big * (math.atan(math.sinh(s1 - sc)) - math.atan(math.sinh(s0 - sc)))
        elif self.tag == "blend":
            mid = 0.5 * (s0 + s1)
            half = 0.5 * (s1 - s0)
            val = float(np.sum(self.f(mid + half * _GL_NODES) * _GL_WEIGHTS) * half)
        else:
            raise ValidationError(f"unknown segment tag {self.tag!r}")
        return 2.0 * math.pi * val


class Profile:
    """Ordered segments plus cap flags (closed = smooth pole with f -> 0)."""

    def __init__(self, segments, closed_left=False, closed_right=False):
        if not segments:
            raise ValidationError("profile needs at least one segment")
        self.segments = list(segments)
        self.closed_left = bool(closed_left)
        self.closed_right = bool(closed_right)
        self.boundaries = np.concatenate([[0.0], np.cumsum([s.length for s in segments])])
        if np.any(np.diff(self.boundaries) <= 0):
            raise ValidationError("segment lengths must be positive")

    @property
    def total_length(self) -> float:
        return float(self.boundaries[-1])

    def _locate(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < -1e-12) or np.any(t > self.total_length + 1e-12):
            raise ValidationError("parameter outside profile domain")
        t = np.clip(t, 0.0, self.total_length)
        seg = np.clip(np.searchsorted(self.boundaries, t, side="right") - 1,
                      0, len(self.segments) - 1)
        return t, seg

    def _eval(self, t, func):
        t, seg = self._locate(t)
        out = np.empty_like(t, dtype=float)
        for k, segment in enumerate(self.segments):
            sel = seg == k
            if np.any(sel):
                out[sel] = func(segment, t[sel] - self.boundaries[k])
        return out

    def f(self, t):
        return self._eval(t, lambda s, x: s.f(x))

    def fprime(self, t):
        return self._eval(t, lambda s, x: s.fprime(x))

    def curvature(self, t):
        return self._eval(t, lambda s, x: s.curvature(x))

    def area(self, t0=None, t1=None) -> float:
        """Area 2 pi int f dt over [t0, t1] (whole domain by default)."""
        t0 = 0.0 if t0 is None else float(t0)
        t1 = self.total_length if t1 is None else float(t1)
        if t1 < t0:
            raise ValidationError("empty area interval")
        (lo, seg_lo), (hi, seg_hi) = self._locate(t0), self._locate(t1)
        seg_lo, seg_hi = int(seg_lo), int(seg_hi)
        total = 0.0
        for k in range(seg_lo, seg_hi + 1):
            s0 = max(lo, self.boundaries[k]) - self.boundaries[k]
            s1 = min(hi, self.boundaries[k + 1]) - self.boundaries[k]
            if s1 > s0:
                total += self.segments[k].area(s0, s1)
        return total

    def validate(self) -> None:
        """Positivity, continuity across joins, smooth poles at closed caps."""
        ts = np.linspace(0, self.total_length, 2048)[1:-1]
        vals = self.f(ts)
        if np.any(vals <= 0):
            raise ValidationError("profile must be positive on the open domain")
        for k in range(1, len(self.segments)):
            b = self.boundaries[k]
            left = float(self.segments[k - 1].f(self.segments[k - 1].length))
            right = float(self.segments[k].f(0.0))
            scale = max(abs(left), abs(right), 1e-12)
            if abs(left - right) > 1e-8 * scale:
                raise ValidationError(
                    f"profile discontinuous at t={b:.6g}: {left!r} vs {right!r}")
        for closed, t_end in ((self.closed_left, 0.0),
                              (self.closed_right, self.total_length)):
            if closed:
                if abs(float(self.f(t_end))) > 1e-9:
                    raise ValidationError("closed cap requires f -> 0 at the pole")
                if abs(abs(float(self.fprime(t_end))) - 1.0) > 1e-9:
                    raise ValidationError("closed cap requires |f'| -> 1 at the pole")


def gauss_curvature(profile: Profile, t):
    """Gauss curvature -f''/f at parameter t, from the segment's closed form."""
    return profile.curvature(t)


# ---------------------------------------------------------------------------
# blending


def _shift_segment(seg: Segment, dt: float) -> Segment:
    """Re-anchor a segment so its local coordinate starts dt further in."""
    length = seg.length - dt
    if seg.tag == "sin":
        amp, p0 = seg.params
        return Segment("sin", length, (amp, p0 + dt / amp))
    if seg.tag == "const":
        return Segment("const", length, seg.params)
    if seg.tag == "exp":
        a, sign = seg.params
        return Segment("exp", length, (a * math.exp(sign * dt), sign))
    if seg.tag == "cosh":
        m, rho, s0 = seg.params
        return Segment("cosh", length, (m, rho, s0 - dt))
    if seg.tag == "sech":
        big, s0 = seg.params
        return Segment("sech", length, (big, s0 - dt))
    if seg.tag == "blend":
        c0, c1, c2, c3 = seg.params
        # ln f(s + dt) expanded back into a cubic in s
        d0 = c0 + dt * (c1 + dt * (c2 + dt * c3))
        d1 = c1 + 2 * c2 * dt + 3 * c3 * dt * dt
        d2 = c2 + 3 * c3 * dt
        return Segment("blend", length, (d0, d1, d2, c3))
    raise ValidationError(f"unknown segment tag {seg.tag!r}")


def _truncate_segment(seg: Segment, new_length: float) -> Segment:
    return Segment(seg.tag, new_length, seg.params)


def _blend_segment(f0, u0, f1, u1, width) -> Segment:
    """Cubic Hermite on ln f over [0, width] matching values and log-slopes."""
    w = float(width)
    h0, h1 = math.log(f0), math.log(f1)
    c0, c1 = h0, u0
    c2 = (3 * (h1 - h0) - (2 * u0 + u1) * w) / w ** 2
    c3 = (2 * (h0 - h1) + (u0 + u1) * w) / w ** 3
    return Segment("blend", w, (c0, c1, c2, c3))


def insert_blends(profile: Profile, width=0.05, slope_tol=1e-12) -> Profile:
    """Replace a width-wide window at each non-C1 interior join by a log-cubic.

    Joins whose values and log-derivatives already match within tolerance are
    left alone (the builders produce exactly-C1 junctions where possible).
    """
    segs = list(profile.segments)
    out = [segs[0]]
    for k in range(1, len(segs)):
        left, right = out[-1], segs[k]
        fl = float(left.f(left.length))
        fr = float(right.f(0.0))
        if abs(fl - fr) > 1e-9 * max(fl, fr):
            raise ValidationError(
                f"cannot blend a value-discontinuous join ({fl!r} vs {fr!r})")
        ul = float(left.fprime(left.length)) / fl
        ur = float(right.fprime(0.0)) / fr
        smooth = abs(ul - ur) <= slope_tol
        if smooth or left.length < width or right.length < width:
            out.append(right)
            continue
        half = 0.5 * width
        lcut = _truncate_segment(left, left.length - half)
        rcut = _shift_segment(right, half)
        f0 = float(lcut.f(lcut.length))
        u0 = float(lcut.fprime(lcut.length)) / f0
        f1 = float(rcut.f(0.0))
        u1 = float(rcut.fprime(0.0)) / f1
        out[-1] = lcut
        out.append(_blend_segment(f0, u0, f1, u1, width))
        out.append(rcut)
    return Profile(out, profile.closed_left, profile.closed_right)


def mirror_profile(profile: Profile) -> Profile:
    """Reverse the parameter direction t -> T - t."""
    segs = []
    for seg in reversed(profile.segments):
        L = seg.length
        if seg.tag == "sin":
            amp, p0 = seg.params
            segs.append(Segment("sin", L, (amp, math.pi - p0 - L / amp)))
        elif seg.tag == "const":
            segs.append(seg)
        elif seg.tag == "exp":
            a, sign = seg.params
            segs.append(Segment("exp", L, (a * math.exp(sign * L), -sign)))
        elif seg.tag == "cosh":
            m, rho, s0 = seg.params
            segs.append(Segment("cosh", L, (m, rho, L - s0)))
        elif seg.tag == "sech":
            big, s0 = seg.params
            segs.append(Segment("sech", L, (big, L - s0)))
        elif seg.tag == "blend":
            c0, c1, c2, c3 = seg.params
            d0 = c0 + L * (c1 + L * (c2 + L * c3))
            d1 = -(c1 + 2 * c2 * L + 3 * c3 * L * L)
            d2 = c2 + 3 * c3 * L
            segs.append(Segment("blend", L, (d0, d1, d2, -c3)))
        else:
            raise ValidationError(f"unknown segment tag {seg.tag!r}")
    return Profile(segs, closed_left=profile.closed_right,
                   closed_right=profile.closed_left)


# ---------------------------------------------------------------------------
# named profile builders


def sphere_profile(radius=1.0) -> Profile:
    return Profile([Segment("sin", math.pi * radius, (radius, 0.0))],
                   closed_left=True, closed_right=True)


def cylinder_profile(radius, length) -> Profile:
    return Profile([Segment("const", length, (radius,))])


def cusp_profile(radius, depth) -> Profile:
    """Pure hyperbolic cusp f = r e^{-t}, K = -1 everywhere, both ends open."""
    return Profile([Segment("exp", depth, (radius, -1.0))])


def tube_with_ends_profile(radius, cylinder_length=1.0, tail_depth=13.2) -> Profile:
    """Cylinder with a collapsing end on each side (two-ended tube).

    The ends are sech shoulders: they leave the cylinder top with matching
    value and slope, decay like 2 r e^{-t}, and keep K inside [-1, 1], so the
    whole space realizes a |K| <= 1 smoothing of cylinder-plus-cusps.
    """
    rise = Segment("sech", tail_depth, (radius, tail_depth))
    mid = Segment("const", cylinder_length, (radius,))
    fall = Segment("sech", tail_depth, (radius, 0.0))
    return Profile([rise, mid, fall])


def collar_half_widths(r_left, r_right, neck_circumference):
    """Arc lengths from a cosh collar's minimum out to value-matched sech flanks.

    A sech flank descending from radius r meets the collar with equal value
    AND slope at depth a where cosh(a)^2 = 2 pi r / neck.
    """
    m = neck_circumference / (2 * math.pi)
    if m <= 0:
        raise ValidationError("neck circumference must be positive")
    for r in (r_left, r_right):
        if 2 * math.pi * r <= neck_circumference:
            raise ValidationError("collar neck must be thinner than what it joins")
    a = math.acosh(math.sqrt(2 * math.pi * r_left / neck_circumference))
    b = math.acosh(math.sqrt(2 * math.pi * r_right / neck_circumference))
    return a, b


def collar_direct_half_width(value, neck_circumference):
    """Arc length from a cosh collar's minimum out to where it reaches `value`.

    Used when the collar attaches straight to a shoulder whose log-slope is
    already close to -1 (e.g. a sin bulb at phase 3 pi / 4); the residual
    slope mismatch is O(exp(-2 width)) and is absorbed by a thin blend.
    """
    m = neck_circumference / (2 * math.pi)
    if value <= m:
        raise ValidationError("collar neck must be thinner than what it joins")
    return math.acosh(value / m)


def chain_profile(radii, necks, cylinder_length=1.0, tail_depth=12.0) -> Profile:
    """Chain of two-ended tubes joined by cosh collars with tiny inner circumference.

    All junctions are exactly C^1: a sech flank at depth a (cosh(a)^2 =
    2 pi r / neck) meets the collar with equal value and slope.
    """
    radii = list(radii)
    necks = list(necks)
    if len(necks) != len(radii) - 1:
        raise ValidationError("need one neck per adjacent pair")
    segs = [Segment("sech", tail_depth, (radii[0], tail_depth)),
            Segment("const", cylinder_length, (radii[0],))]
    for i, neck in enumerate(necks):
        r0, r1 = radii[i], radii[i + 1]
        a, b = collar_half_widths(r0, r1, neck)
        m = neck / (2 * math.pi)
        segs.append(Segment("sech", a, (r0, 0.0)))
        segs.append(Segment("cosh", a + b, (m, 1.0, a)))
        segs.append(Segment("sech", b, (r1, b)))
        segs.append(Segment("const", cylinder_length, (r1,)))
    segs.append(Segment("sech", tail_depth, (radii[-1], 0.0)))
    return Profile(segs)


_DUMBBELL_SHOULDER = 0.75 * math.pi  # sin phase where the log-slope hits -1


def dumbbell_profile(neck_circumference, blend_width=0.05) -> Profile:
    """Two unit-sphere bulbs joined by a cosh collar (rotational metric on S^2)."""
    shoulder_value = math.sin(_DUMBBELL_SHOULDER)
    a = collar_direct_half_width(shoulder_value, neck_circumference)
    b = a
    m = neck_circumference / (2 * math.pi)
    segs = [Segment("sin", _DUMBBELL_SHOULDER, (1.0, 0.0)),
            Segment("cosh", a + b, (m, 1.0, a)),
            Segment("sin", _DUMBBELL_SHOULDER, (1.0, math.pi - _DUMBBELL_SHOULDER))]
    prof = Profile(segs, closed_left=True, closed_right=True)
    if blend_width:
        prof = insert_blends(prof, blend_width)
    return prof


def bulb_with_cusp_profile(tail_depth=12.6) -> Profile:
    """Unit-sphere bulb continued by an exact hyperbolic cusp (one end).

    This is what one side of a dumbbell degenerates to as the neck pinches:
    at the shoulder the sin bulb has log-slope exactly -1, so the exponential
    cusp attaches C^1 with no blending.
    """
    shoulder_value = math.sin(_DUMBBELL_SHOULDER)
    segs = [Segment("sin", _DUMBBELL_SHOULDER, (1.0, 0.0)),
            Segment("exp", tail_depth, (shoulder_value, -1.0))]
    return Profile(segs, closed_left=True, closed_right=False)


def curvature_dip_profile(radius=1.0, dip_curvature=-2.0, half_width=0.5,
                          pad=1.0, blend_width=0.05) -> Profile:
    """Cylinder with a band of prescribed constant curvature K0 < -1.

    The band is m cosh(sqrt(-K0) (s - w)) sized so its edges meet the cylinder
    value; the short log-cubic blends at the edges have K > 0 and therefore
    contribute nothing to integrals over {K < -1}.
    """
    if dip_curvature >= -1.0:
        raise ValidationError("dip curvature must lie below -1")
    rho = math.sqrt(-dip_curvature)
    m = radius / math.cosh(rho * half_width)
    segs = [Segment("const", pad, (radius,)),
            Segment("cosh", 2 * half_width, (m, rho, half_width)),
            Segment("const", pad, (radius,))]
    return insert_blends(Profile(segs), blend_width)

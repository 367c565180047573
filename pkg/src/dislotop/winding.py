"""Winding numbers, phase lifts, and signed crossings of circle-valued maps.

Paths are sampled adaptively until adjacent lifted phases differ by less than
pi/2 (half of what a well-defined lift needs, to buy margin against sharp
phase motion near eigenvalue crossings); the winding is then read from the
lift and validated to be an integer. Crossings of a target point carry the
orientation of the local phase slope.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

# strict inequality with a margin so borderline pi/2 jumps (phase aliasing)
# still trigger refinement
MAX_PHASE_GAP = 0.5 * math.pi - 1e-9
WINDING_RESIDUAL_TOL = 0.01
TANGENCY_SLOPE_TOL = 1e-6
SLOPE_STEP = 1e-6


class RefinementExhaustedError(RuntimeError):
    """Phase gap persisted at the refinement depth limit (near-discontinuity);
    raise the ODE tolerance or the sample count."""


class NonIntegerWindingError(RuntimeError):
    """Lifted phase difference is not close to a multiple of 2 pi."""


class NonregularValueError(RuntimeError):
    """Target point is crossed tangentially; perturb it and retry."""


@dataclass(frozen=True)
class Crossing:
    t: float
    sign: int
    z: complex


@dataclass(frozen=True)
class PhasePath:
    """Adaptively sampled circle-valued map with a continuous phase lift."""

    ts: np.ndarray
    zs: np.ndarray
    alphas: np.ndarray
    closed: bool
    _f: object = field(default=None, repr=False, compare=False)

    @classmethod
    def from_samples(cls, ts, zs, closed: bool, f=None) -> "PhasePath":
        ts = np.asarray(ts, dtype=float)
        zs = np.asarray(zs, dtype=complex)
        mods = np.abs(zs)
        if np.any(np.abs(mods - 1.0) > 1e-6):
            raise ValueError("samples are not on the unit circle")
        zs = zs / mods
        steps = np.angle(zs[1:] / zs[:-1])
        if np.any(np.abs(steps) >= MAX_PHASE_GAP):
            raise RefinementExhaustedError(
                "adjacent phase gap >= pi/2; increase the sample count")
        alphas = np.concatenate(([cmath.phase(zs[0])], cmath.phase(zs[0]) + np.cumsum(steps)))
        return cls(ts=ts, zs=zs, alphas=alphas, closed=closed, _f=f)

    def __len__(self) -> int:
        return len(self.ts)

    def csv_rows(self) -> list[tuple]:
        return [(t, z.real, z.imag, a)
                for t, z, a in zip(self.ts, self.zs, self.alphas)]


def build_path(f, refine_limit: int = 24, init_samples: int = 8,
               domain: tuple[float, float] = (0.0, 1.0),
               closed: bool = True) -> PhasePath:
    """Sample t -> f(t) on [domain] until adjacent phase gaps are below pi/2.

    Bisection is inserted where the guarantee fails, each interval being cut at
    most refine_limit times. For a closed path f(start) and f(end) must agree
    to 1e-6.
    """
    a, b = domain
    ts = list(np.linspace(a, b, init_samples + 1))
    zs = [complex(f(t)) for t in ts]
    if closed and abs(zs[0] - zs[-1]) > 1e-6:
        raise ValueError(f"path is not closed: |f({a}) - f({b})| = {abs(zs[0] - zs[-1]):g}")

    out_t = [ts[0]]
    out_z = [zs[0]]
    for t1, z1 in zip(ts[1:], zs[1:]):
        _refine_into(f, out_t, out_z, t1, z1, refine_limit)
    zs = np.array(out_z)
    mods = np.abs(zs)
    if np.any(mods == 0.0):
        raise ValueError("map touched the origin; not circle-valued")
    return PhasePath.from_samples(np.array(out_t), zs / mods, closed=closed, f=f)


def _refine_into(f, out_t, out_z, t1, z1, refine_limit):
    """Append samples up to (t1, z1), bisecting until both half-gaps are below
    pi/2 and the midpoint confirms the principal value (no hidden 2 pi wrap)."""
    stack = [(t1, z1, 0)]
    while stack:
        t_next, z_next, depth = stack.pop()
        t_prev, z_prev = out_t[-1], out_z[-1]
        if z_prev == 0 or z_next == 0:
            raise ValueError("map touched the origin; not circle-valued")
        tm = 0.5 * (t_prev + t_next)
        zm = complex(f(tm))
        g1 = cmath.phase(zm / z_prev)
        g2 = cmath.phase(z_next / zm)
        g = cmath.phase(z_next / z_prev)
        if abs(g1) < MAX_PHASE_GAP and abs(g2) < MAX_PHASE_GAP and abs(g1 + g2 - g) < 1e-9:
            out_t.append(tm)
            out_z.append(zm)
            out_t.append(t_next)
            out_z.append(z_next)
            continue
        if depth >= refine_limit:
            raise RefinementExhaustedError(
                f"phase gap {max(abs(g1), abs(g2)):.3f} rad at t in "
                f"[{t_prev!r}, {t_next!r}] after {refine_limit} bisections")
        stack.append((t_next, z_next, depth + 1))
        stack.append((tm, zm, depth + 1))


def winding_number(path: PhasePath) -> int:
    """(alpha(1) - alpha(0)) / 2 pi, validated to be an integer."""
    if not path.closed:
        raise ValueError("winding number needs a closed path")
    w = (path.alphas[-1] - path.alphas[0]) / (2.0 * math.pi)
    n = round(w)
    if abs(w - n) >= WINDING_RESIDUAL_TOL:
        raise NonIntegerWindingError(
            f"winding residual {w - n:+.3g} too large; path under-resolved")
    return int(n)


def crossings(path: PhasePath, z: complex) -> list[Crossing]:
    """All parameter values where the path passes through z, with orientation
    signs read from the local lift slope. z must be regular (no tangencies)."""
    if abs(abs(z) - 1.0) > 1e-6:
        raise ValueError("target point must lie on the unit circle")
    z = z / abs(z)
    beta = cmath.phase(z)
    f = path._f
    found: list[Crossing] = []

    w = path.alphas - beta
    for i in range(len(path.ts) - 1):
        w0, w1 = w[i], w[i + 1]
        lo, hi = (w0, w1) if w0 <= w1 else (w1, w0)
        m_lo = math.ceil(lo / (2.0 * math.pi) - 1e-12)
        m_hi = math.floor(hi / (2.0 * math.pi) + 1e-12)
        for m in range(m_lo, m_hi + 1):
            target = 2.0 * math.pi * m
            t_star = _locate_crossing(path, f, i, w0, w1, target, beta)
            found.append(t_star)

    merged: list[float] = []
    for t_star in sorted(found):
        if merged and abs(t_star - merged[-1]) < 1e-9:
            continue
        merged.append(t_star)
    if path.closed and len(merged) >= 2:
        period = path.ts[-1] - path.ts[0]
        if abs((merged[-1] - merged[0]) - period) < 1e-9:
            merged.pop()

    if len(merged) >= 2:
        min_gap = min(b - a for a, b in zip(merged, merged[1:]))
    else:
        min_gap = float(path.ts[-1] - path.ts[0])
    return [Crossing(t=t_star, sign=_slope_sign(path, f, t_star, beta, min_gap), z=z)
            for t_star in merged]


def _locate_crossing(path, f, i, w0, w1, target, beta) -> float:
    ta, tb = float(path.ts[i]), float(path.ts[i + 1])
    if abs(w0 - target) < 1e-12:
        return ta
    if abs(w1 - target) < 1e-12:
        return tb
    if f is None:
        # no callback: linear interpolation on the lift
        return ta + (tb - ta) * (target - w0) / (w1 - w0)

    # phase relative to the crossed point: continuous on the bracket because the
    # lift stays within (target - pi, target + pi) there
    rot = cmath.exp(-1j * beta)
    ra, rb = _rel_value(f, ta, rot, target), _rel_value(f, tb, rot, target)
    if ra * rb > 0.0:
        return ta if abs(ra) <= abs(rb) else tb
    return float(brentq(lambda t: _rel_value(f, t, rot, target), ta, tb, xtol=1e-12))


def _rel_value(f, t, rot, target) -> float:
    """Principal phase of f(t) e^{-i beta}, unwrapped to sit near the target level."""
    p = cmath.phase(complex(f(t)) * rot)
    k = round((target - p) / (2.0 * math.pi))
    return p + 2.0 * math.pi * k - target


def _slope_sign(path, f, t_star, beta, min_gap: float) -> int:
    """Orientation of a crossing: sign of the local lift slope.

    A vanishing centered-difference slope is escalated to a sign-change probe
    at growing offsets (an odd-order flat crossing still has a well-defined
    orientation); only an even-order touch, which does not actually cross,
    raises NonregularValueError.
    """
    if f is None:
        # finite difference on the sampled lift
        idx = np.searchsorted(path.ts, t_star)
        i = max(1, min(len(path.ts) - 1, idx))
        slope = (path.alphas[i] - path.alphas[i - 1]) / (path.ts[i] - path.ts[i - 1])
        if abs(slope) < TANGENCY_SLOPE_TOL:
            raise NonregularValueError(
                f"tangential crossing at t = {t_star!r} (slope {slope:.2g}); perturb z")
        return 1 if slope > 0 else -1

    def phase_diff(h: float) -> float:
        t_m, t_p = t_star - h, t_star + h
        if path.closed:
            period = path.ts[-1] - path.ts[0]
            t_m = path.ts[0] + (t_m - path.ts[0]) % period
            t_p = path.ts[0] + (t_p - path.ts[0]) % period
        else:
            t_m = max(t_m, float(path.ts[0]))
            t_p = min(t_p, float(path.ts[-1]))
        return cmath.phase(complex(f(t_p)) / complex(f(t_m)))

    d = phase_diff(SLOPE_STEP)
    if abs(d) >= 2.0 * SLOPE_STEP * TANGENCY_SLOPE_TOL:
        return 1 if d > 0 else -1
    h = 10.0 * SLOPE_STEP
    h_max = 0.25 * min_gap
    while h <= h_max:
        d = phase_diff(h)
        if abs(d) > 1e-9:
            return 1 if d > 0 else -1
        h *= 10.0
    raise NonregularValueError(
        f"tangential (non-crossing) touch at t = {t_star!r}; perturb z")

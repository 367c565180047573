"""Pure-Python propagation kernels (Dormand-Prince 5(4), embedded error control).

Each function advances one smooth segment: the switch function is affine
(chi = alpha + beta*x) on the whole segment, so the right-hand side is smooth
and the integrator keeps its full order. Splitting at kinks is the caller's
job. Growth is absorbed multiplicatively: whenever the state norm leaves
[1/threshold, threshold] it is renormalised and the log of the factor is
accumulated, which is legitimate because both systems are linear.

Status codes: 0 = reached the target, 1 = step-size underflow.
"""
from __future__ import annotations

import math

BACKEND = "python"

# Dormand-Prince 5(4) tableau
_C2, _C3, _C4, _C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
_A21 = 1 / 5
_A31, _A32 = 3 / 40, 9 / 40
_A41, _A42, _A43 = 44 / 45, -56 / 15, 32 / 9
_A51, _A52, _A53, _A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
_A61, _A62, _A63, _A64, _A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
_A71, _A73, _A74, _A75, _A76 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
# error = 5th-order minus 4th-order weights
_E1, _E3, _E4, _E5, _E6, _E7 = (
    71 / 57600,
    -71 / 16695,
    71 / 1920,
    -17253 / 339200,
    22 / 525,
    -1 / 40,
)

_MIN_FACTOR = 0.2
_MAX_FACTOR = 5.0
_SAFETY = 0.9
_MAX_STEPS = 10_000_000
TWO_PI = 2.0 * math.pi


def _potential(x, vc, vcos, vsin):
    v = vc
    w = TWO_PI * x
    for j in range(len(vcos)):
        v += vcos[j] * math.cos((j + 1) * w)
    for j in range(len(vsin)):
        v += vsin[j] * math.sin((j + 1) * w)
    return v


def hill_segment(u, du, x0, x1, E, t, vc, vcos, vsin, alpha, beta,
                 rtol, atol, max_step, rescale_threshold):
    """Advance (u, u') of  -u'' + W u = E u  from x0 to x1 on one smooth segment,
    where W(x) = chi(x) V(x) + (1 - chi(x)) V(x - t) and chi = alpha + beta*x."""
    vcos = tuple(vcos)
    vsin = tuple(vsin)

    def rhs(x, y0, y1):
        chi = alpha + beta * x
        if chi == 0.0:
            w = _potential(x - t, vc, vcos, vsin)
        elif chi == 1.0:
            w = _potential(x, vc, vcos, vsin)
        else:
            w = chi * _potential(x, vc, vcos, vsin) + (1.0 - chi) * _potential(x - t, vc, vcos, vsin)
        return y1, (w - E) * y0

    return _advance_real(rhs, u, du, x0, x1, rtol, atol, max_step, rescale_threshold)


def dirac_segment(up, dn, x0, x1, E, t, vc, vcos, vsin, alpha, beta,
                  rtol, atol, max_step, rescale_threshold):
    """Advance the spinor (up, dn) of the dislocated Dirac system on one smooth
    segment: masses m1 = V(x)(chi + (1-chi) cos 2pi t), m2 = -V(x)(1-chi) sin 2pi t."""
    vcos = tuple(vcos)
    vsin = tuple(vsin)
    ct = math.cos(TWO_PI * t)
    st = math.sin(TWO_PI * t)

    def rhs(x, yu, yd):
        chi = alpha + beta * x
        v = _potential(x, vc, vcos, vsin)
        m1 = v * (chi + (1.0 - chi) * ct)
        m2 = -v * (1.0 - chi) * st
        fu = 1j * E * yu - (1j * m1 + m2) * yd
        fd = (1j * m1 - m2) * yu - 1j * E * yd
        return fu, fd

    return _advance_complex(rhs, up, dn, x0, x1, rtol, atol, max_step, rescale_threshold)


def _advance_real(rhs, y0, y1, x0, x1, rtol, atol, max_step, thr):
    if x1 == x0:
        return y0, y1, 0.0, x0, 0
    direction = 1.0 if x1 > x0 else -1.0
    x = x0
    dlog = 0.0
    f0, f1 = rhs(x, y0, y1)

    sc0 = atol + rtol * abs(y0)
    sc1 = atol + rtol * abs(y1)
    d0 = math.hypot(y0 / sc0, y1 / sc1)
    d1 = math.hypot(f0 / sc0, f1 / sc1)
    h = 0.01 * d0 / d1 if (d0 > 1e-5 and d1 > 1e-5) else 1e-6
    h = direction * min(h, max_step, abs(x1 - x0))

    for _ in range(_MAX_STEPS):
        if direction * (x + h - x1) > 0.0 or abs(x1 - x) <= abs(h):
            h = x1 - x
        if abs(h) < 1e-14 * max(1.0, abs(x)):
            return y0, y1, dlog, x, 1

        k10, k11 = f0, f1
        k20, k21 = rhs(x + _C2 * h, y0 + h * _A21 * k10, y1 + h * _A21 * k11)
        k30, k31 = rhs(x + _C3 * h, y0 + h * (_A31 * k10 + _A32 * k20),
                       y1 + h * (_A31 * k11 + _A32 * k21))
        k40, k41 = rhs(x + _C4 * h, y0 + h * (_A41 * k10 + _A42 * k20 + _A43 * k30),
                       y1 + h * (_A41 * k11 + _A42 * k21 + _A43 * k31))
        k50, k51 = rhs(x + _C5 * h,
                       y0 + h * (_A51 * k10 + _A52 * k20 + _A53 * k30 + _A54 * k40),
                       y1 + h * (_A51 * k11 + _A52 * k21 + _A53 * k31 + _A54 * k41))
        k60, k61 = rhs(x + h,
                       y0 + h * (_A61 * k10 + _A62 * k20 + _A63 * k30 + _A64 * k40 + _A65 * k50),
                       y1 + h * (_A61 * k11 + _A62 * k21 + _A63 * k31 + _A64 * k41 + _A65 * k51))
        z0 = y0 + h * (_A71 * k10 + _A73 * k30 + _A74 * k40 + _A75 * k50 + _A76 * k60)
        z1 = y1 + h * (_A71 * k11 + _A73 * k31 + _A74 * k41 + _A75 * k51 + _A76 * k61)
        k70, k71 = rhs(x + h, z0, z1)

        e0 = h * (_E1 * k10 + _E3 * k30 + _E4 * k40 + _E5 * k50 + _E6 * k60 + _E7 * k70)
        e1 = h * (_E1 * k11 + _E3 * k31 + _E4 * k41 + _E5 * k51 + _E6 * k61 + _E7 * k71)
        sc0 = atol + rtol * max(abs(y0), abs(z0))
        sc1 = atol + rtol * max(abs(y1), abs(z1))
        err = math.sqrt(0.5 * ((e0 / sc0) ** 2 + (e1 / sc1) ** 2))

        if err <= 1.0:
            x += h
            y0, y1 = z0, z1
            f0, f1 = k70, k71
            if direction * (x - x1) >= 0.0:
                return y0, y1, dlog, x, 0
            m = max(abs(y0), abs(y1))
            if m > thr or (0.0 < m < 1.0 / thr):
                inv = 1.0 / m
                y0 *= inv
                y1 *= inv
                f0 *= inv
                f1 *= inv
                dlog += math.log(m)
            factor = _MAX_FACTOR if err == 0.0 else min(_MAX_FACTOR, _SAFETY * err ** -0.2)
        else:
            factor = max(_MIN_FACTOR, _SAFETY * err ** -0.2)
        h *= factor
        if abs(h) > max_step:
            h = direction * max_step
    return y0, y1, dlog, x, 1


def _advance_complex(rhs, yu, yd, x0, x1, rtol, atol, max_step, thr):
    if x1 == x0:
        return yu, yd, 0.0, x0, 0
    direction = 1.0 if x1 > x0 else -1.0
    x = x0
    dlog = 0.0
    fu, fd = rhs(x, yu, yd)

    scu = atol + rtol * abs(yu)
    scd = atol + rtol * abs(yd)
    d0 = math.hypot(abs(yu) / scu, abs(yd) / scd)
    d1 = math.hypot(abs(fu) / scu, abs(fd) / scd)
    h = 0.01 * d0 / d1 if (d0 > 1e-5 and d1 > 1e-5) else 1e-6
    h = direction * min(h, max_step, abs(x1 - x0))

    for _ in range(_MAX_STEPS):
        if direction * (x + h - x1) > 0.0 or abs(x1 - x) <= abs(h):
            h = x1 - x
        if abs(h) < 1e-14 * max(1.0, abs(x)):
            return yu, yd, dlog, x, 1

        k1u, k1d = fu, fd
        k2u, k2d = rhs(x + _C2 * h, yu + h * _A21 * k1u, yd + h * _A21 * k1d)
        k3u, k3d = rhs(x + _C3 * h, yu + h * (_A31 * k1u + _A32 * k2u),
                       yd + h * (_A31 * k1d + _A32 * k2d))
        k4u, k4d = rhs(x + _C4 * h, yu + h * (_A41 * k1u + _A42 * k2u + _A43 * k3u),
                       yd + h * (_A41 * k1d + _A42 * k2d + _A43 * k3d))
        k5u, k5d = rhs(x + _C5 * h,
                       yu + h * (_A51 * k1u + _A52 * k2u + _A53 * k3u + _A54 * k4u),
                       yd + h * (_A51 * k1d + _A52 * k2d + _A53 * k3d + _A54 * k4d))
        k6u, k6d = rhs(x + h,
                       yu + h * (_A61 * k1u + _A62 * k2u + _A63 * k3u + _A64 * k4u + _A65 * k5u),
                       yd + h * (_A61 * k1d + _A62 * k2d + _A63 * k3d + _A64 * k4d + _A65 * k5d))
        zu = yu + h * (_A71 * k1u + _A73 * k3u + _A74 * k4u + _A75 * k5u + _A76 * k6u)
        zd = yd + h * (_A71 * k1d + _A73 * k3d + _A74 * k4d + _A75 * k5d + _A76 * k6d)
        k7u, k7d = rhs(x + h, zu, zd)

        eu = h * (_E1 * k1u + _E3 * k3u + _E4 * k4u + _E5 * k5u + _E6 * k6u + _E7 * k7u)
        ed = h * (_E1 * k1d + _E3 * k3d + _E4 * k4d + _E5 * k5d + _E6 * k6d + _E7 * k7d)
        scu = atol + rtol * max(abs(yu), abs(zu))
        scd = atol + rtol * max(abs(yd), abs(zd))
        err = math.sqrt(0.5 * ((abs(eu) / scu) ** 2 + (abs(ed) / scd) ** 2))

        if err <= 1.0:
            x += h
            yu, yd = zu, zd
            fu, fd = k7u, k7d
            if direction * (x - x1) >= 0.0:
                return yu, yd, dlog, x, 0
            m = max(abs(yu), abs(yd))
            if m > thr or (0.0 < m < 1.0 / thr):
                inv = 1.0 / m
                yu *= inv
                yd *= inv
                fu *= inv
                fd *= inv
                dlog += math.log(m)
            factor = _MAX_FACTOR if err == 0.0 else min(_MAX_FACTOR, _SAFETY * err ** -0.2)
        else:
            factor = max(_MIN_FACTOR, _SAFETY * err ** -0.2)
        h *= factor
        if abs(h) > max_step:
            h = direction * max_step
    return yu, yd, dlog, x, 1

# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled propagation kernels. Mirrors _fallback.py step for step; see there
for the contract (one smooth segment per call, multiplicative rescaling,
status 0 = ok, 1 = step underflow)."""

from libc.math cimport cos, sin, sqrt, log, fabs, hypot, fmax, fmin, pow

cdef extern from "complex.h":
    double cabs(double complex z) nogil

BACKEND = "cython"

cdef double TWO_PI = 6.283185307179586476925287

cdef double C2 = 1.0 / 5.0, C3 = 3.0 / 10.0, C4 = 4.0 / 5.0, C5 = 8.0 / 9.0
cdef double A21 = 1.0 / 5.0
cdef double A31 = 3.0 / 40.0, A32 = 9.0 / 40.0
cdef double A41 = 44.0 / 45.0, A42 = -56.0 / 15.0, A43 = 32.0 / 9.0
cdef double A51 = 19372.0 / 6561.0, A52 = -25360.0 / 2187.0
cdef double A53 = 64448.0 / 6561.0, A54 = -212.0 / 729.0
cdef double A61 = 9017.0 / 3168.0, A62 = -355.0 / 33.0, A63 = 46732.0 / 5247.0
cdef double A64 = 49.0 / 176.0, A65 = -5103.0 / 18656.0
cdef double A71 = 35.0 / 384.0, A73 = 500.0 / 1113.0, A74 = 125.0 / 192.0
cdef double A75 = -2187.0 / 6784.0, A76 = 11.0 / 84.0
cdef double E1 = 71.0 / 57600.0, E3 = -71.0 / 16695.0, E4 = 71.0 / 1920.0
cdef double E5 = -17253.0 / 339200.0, E6 = 22.0 / 525.0, E7 = -1.0 / 40.0

cdef double MIN_FACTOR = 0.2
cdef double MAX_FACTOR = 5.0
cdef double SAFETY = 0.9
cdef long MAX_STEPS = 10000000


cdef inline double _potential(double x, double vc, double[::1] vcos,
                              double[::1] vsin) nogil:
    cdef double v = vc
    cdef double w = TWO_PI * x
    cdef Py_ssize_t j
    for j in range(vcos.shape[0]):
        v += vcos[j] * cos((j + 1) * w)
    for j in range(vsin.shape[0]):
        v += vsin[j] * sin((j + 1) * w)
    return v


cdef inline double _hill_q(double x, double E, double t, double vc,
                           double[::1] vcos, double[::1] vsin,
                           double alpha, double beta) nogil:
    cdef double chi = alpha + beta * x
    cdef double w
    if chi == 0.0:
        w = _potential(x - t, vc, vcos, vsin)
    elif chi == 1.0:
        w = _potential(x, vc, vcos, vsin)
    else:
        w = chi * _potential(x, vc, vcos, vsin) + \
            (1.0 - chi) * _potential(x - t, vc, vcos, vsin)
    return w - E


def hill_segment(double u, double du, double x0, double x1, double E, double t,
                 double vc, double[::1] vcos, double[::1] vsin,
                 double alpha, double beta,
                 double rtol, double atol, double max_step,
                 double rescale_threshold):
    cdef double y0 = u, y1 = du
    cdef double x = x0, dlog = 0.0, direction, h
    cdef double f0, f1, q
    cdef double k10, k11, k20, k21, k30, k31, k40, k41, k50, k51, k60, k61, k70, k71
    cdef double z0, z1, e0, e1, sc0, sc1, err, d0, d1, m, inv, factor
    cdef long it

    if x1 == x0:
        return y0, y1, 0.0, x0, 0
    direction = 1.0 if x1 > x0 else -1.0

    q = _hill_q(x, E, t, vc, vcos, vsin, alpha, beta)
    f0 = y1
    f1 = q * y0

    sc0 = atol + rtol * fabs(y0)
    sc1 = atol + rtol * fabs(y1)
    d0 = hypot(y0 / sc0, y1 / sc1)
    d1 = hypot(f0 / sc0, f1 / sc1)
    if d0 > 1e-5 and d1 > 1e-5:
        h = 0.01 * d0 / d1
    else:
        h = 1e-6
    h = direction * fmin(fmin(h, max_step), fabs(x1 - x0))

    for it in range(MAX_STEPS):
        if direction * (x + h - x1) > 0.0 or fabs(x1 - x) <= fabs(h):
            h = x1 - x
        if fabs(h) < 1e-14 * fmax(1.0, fabs(x)):
            return y0, y1, dlog, x, 1

        k10 = f0; k11 = f1
        z0 = y0 + h * A21 * k10
        z1 = y1 + h * A21 * k11
        q = _hill_q(x + C2 * h, E, t, vc, vcos, vsin, alpha, beta)
        k20 = z1; k21 = q * z0

        z0 = y0 + h * (A31 * k10 + A32 * k20)
        z1 = y1 + h * (A31 * k11 + A32 * k21)
        q = _hill_q(x + C3 * h, E, t, vc, vcos, vsin, alpha, beta)
        k30 = z1; k31 = q * z0

        z0 = y0 + h * (A41 * k10 + A42 * k20 + A43 * k30)
        z1 = y1 + h * (A41 * k11 + A42 * k21 + A43 * k31)
        q = _hill_q(x + C4 * h, E, t, vc, vcos, vsin, alpha, beta)
        k40 = z1; k41 = q * z0

        z0 = y0 + h * (A51 * k10 + A52 * k20 + A53 * k30 + A54 * k40)
        z1 = y1 + h * (A51 * k11 + A52 * k21 + A53 * k31 + A54 * k41)
        q = _hill_q(x + C5 * h, E, t, vc, vcos, vsin, alpha, beta)
        k50 = z1; k51 = q * z0

        z0 = y0 + h * (A61 * k10 + A62 * k20 + A63 * k30 + A64 * k40 + A65 * k50)
        z1 = y1 + h * (A61 * k11 + A62 * k21 + A63 * k31 + A64 * k41 + A65 * k51)
        q = _hill_q(x + h, E, t, vc, vcos, vsin, alpha, beta)
        k60 = z1; k61 = q * z0

        z0 = y0 + h * (A71 * k10 + A73 * k30 + A74 * k40 + A75 * k50 + A76 * k60)
        z1 = y1 + h * (A71 * k11 + A73 * k31 + A74 * k41 + A75 * k51 + A76 * k61)
        q = _hill_q(x + h, E, t, vc, vcos, vsin, alpha, beta)
        k70 = z1; k71 = q * z0

        e0 = h * (E1 * k10 + E3 * k30 + E4 * k40 + E5 * k50 + E6 * k60 + E7 * k70)
        e1 = h * (E1 * k11 + E3 * k31 + E4 * k41 + E5 * k51 + E6 * k61 + E7 * k71)
        sc0 = atol + rtol * fmax(fabs(y0), fabs(z0))
        sc1 = atol + rtol * fmax(fabs(y1), fabs(z1))
        err = sqrt(0.5 * ((e0 / sc0) * (e0 / sc0) + (e1 / sc1) * (e1 / sc1)))

        if err <= 1.0:
            x += h
            y0 = z0; y1 = z1
            f0 = k70; f1 = k71
            if direction * (x - x1) >= 0.0:
                return y0, y1, dlog, x, 0
            m = fmax(fabs(y0), fabs(y1))
            if m > rescale_threshold or (0.0 < m < 1.0 / rescale_threshold):
                inv = 1.0 / m
                y0 *= inv; y1 *= inv
                f0 *= inv; f1 *= inv
                dlog += log(m)
            if err == 0.0:
                factor = MAX_FACTOR
            else:
                factor = fmin(MAX_FACTOR, SAFETY * pow(err, -0.2))
        else:
            factor = fmax(MIN_FACTOR, SAFETY * pow(err, -0.2))
        h *= factor
        if fabs(h) > max_step:
            h = direction * max_step
    return y0, y1, dlog, x, 1


def dirac_segment(double complex up, double complex dn, double x0, double x1,
                  double E, double t,
                  double vc, double[::1] vcos, double[::1] vsin,
                  double alpha, double beta,
                  double rtol, double atol, double max_step,
                  double rescale_threshold):
    cdef double complex yu = up, yd = dn
    cdef double x = x0, dlog = 0.0, direction, h
    cdef double ct = cos(TWO_PI * t), st = sin(TWO_PI * t)
    cdef double complex fu, fd
    cdef double complex k1u, k1d, k2u, k2d, k3u, k3d, k4u, k4d, k5u, k5d, k6u, k6d, k7u, k7d
    cdef double complex zu, zd, eu, ed
    cdef double scu, scd, err, d0, d1, m, inv, factor, chi, v, m1, m2, xs
    cdef long it

    if x1 == x0:
        return yu, yd, 0.0, x0, 0
    direction = 1.0 if x1 > x0 else -1.0

    chi = alpha + beta * x
    v = _potential(x, vc, vcos, vsin)
    m1 = v * (chi + (1.0 - chi) * ct)
    m2 = -v * (1.0 - chi) * st
    fu = 1j * E * yu - (1j * m1 + m2) * yd
    fd = (1j * m1 - m2) * yu - 1j * E * yd

    scu = atol + rtol * cabs(yu)
    scd = atol + rtol * cabs(yd)
    d0 = hypot(cabs(yu) / scu, cabs(yd) / scd)
    d1 = hypot(cabs(fu) / scu, cabs(fd) / scd)
    if d0 > 1e-5 and d1 > 1e-5:
        h = 0.01 * d0 / d1
    else:
        h = 1e-6
    h = direction * fmin(fmin(h, max_step), fabs(x1 - x0))

    for it in range(MAX_STEPS):
        if direction * (x + h - x1) > 0.0 or fabs(x1 - x) <= fabs(h):
            h = x1 - x
        if fabs(h) < 1e-14 * fmax(1.0, fabs(x)):
            return yu, yd, dlog, x, 1

        k1u = fu; k1d = fd

        zu = yu + h * A21 * k1u
        zd = yd + h * A21 * k1d
        xs = x + C2 * h
        chi = alpha + beta * xs
        v = _potential(xs, vc, vcos, vsin)
        m1 = v * (chi + (1.0 - chi) * ct); m2 = -v * (1.0 - chi) * st
        k2u = 1j * E * zu - (1j * m1 + m2) * zd
        k2d = (1j * m1 - m2) * zu - 1j * E * zd

        zu = yu + h * (A31 * k1u + A32 * k2u)
        zd = yd + h * (A31 * k1d + A32 * k2d)
        xs = x + C3 * h
        chi = alpha + beta * xs
        v = _potential(xs, vc, vcos, vsin)
        m1 = v * (chi + (1.0 - chi) * ct); m2 = -v * (1.0 - chi) * st
        k3u = 1j * E * zu - (1j * m1 + m2) * zd
        k3d = (1j * m1 - m2) * zu - 1j * E * zd

        zu = yu + h * (A41 * k1u + A42 * k2u + A43 * k3u)
        zd = yd + h * (A41 * k1d + A42 * k2d + A43 * k3d)
        xs = x + C4 * h
        chi = alpha + beta * xs
        v = _potential(xs, vc, vcos, vsin)
        m1 = v * (chi + (1.0 - chi) * ct); m2 = -v * (1.0 - chi) * st
        k4u = 1j * E * zu - (1j * m1 + m2) * zd
        k4d = (1j * m1 - m2) * zu - 1j * E * zd

        zu = yu + h * (A51 * k1u + A52 * k2u + A53 * k3u + A54 * k4u)
        zd = yd + h * (A51 * k1d + A52 * k2d + A53 * k3d + A54 * k4d)
        xs = x + C5 * h
        chi = alpha + beta * xs
        v = _potential(xs, vc, vcos, vsin)
        m1 = v * (chi + (1.0 - chi) * ct); m2 = -v * (1.0 - chi) * st
        k5u = 1j * E * zu - (1j * m1 + m2) * zd
        k5d = (1j * m1 - m2) * zu - 1j * E * zd

        zu = yu + h * (A61 * k1u + A62 * k2u + A63 * k3u + A64 * k4u + A65 * k5u)
        zd = yd + h * (A61 * k1d + A62 * k2d + A63 * k3d + A64 * k4d + A65 * k5d)
        xs = x + h
        chi = alpha + beta * xs
        v = _potential(xs, vc, vcos, vsin)
        m1 = v * (chi + (1.0 - chi) * ct); m2 = -v * (1.0 - chi) * st
        k6u = 1j * E * zu - (1j * m1 + m2) * zd
        k6d = (1j * m1 - m2) * zu - 1j * E * zd

        zu = yu + h * (A71 * k1u + A73 * k3u + A74 * k4u + A75 * k5u + A76 * k6u)
        zd = yd + h * (A71 * k1d + A73 * k3d + A74 * k4d + A75 * k5d + A76 * k6d)
        k7u = 1j * E * zu - (1j * m1 + m2) * zd
        k7d = (1j * m1 - m2) * zu - 1j * E * zd

        eu = h * (E1 * k1u + E3 * k3u + E4 * k4u + E5 * k5u + E6 * k6u + E7 * k7u)
        ed = h * (E1 * k1d + E3 * k3d + E4 * k4d + E5 * k5d + E6 * k6d + E7 * k7d)
        scu = atol + rtol * fmax(cabs(yu), cabs(zu))
        scd = atol + rtol * fmax(cabs(yd), cabs(zd))
        err = sqrt(0.5 * ((cabs(eu) / scu) * (cabs(eu) / scu) +
                          (cabs(ed) / scd) * (cabs(ed) / scd)))

        if err <= 1.0:
            x += h
            yu = zu; yd = zd
            fu = k7u; fd = k7d
            if direction * (x - x1) >= 0.0:
                return yu, yd, dlog, x, 0
            m = fmax(cabs(yu), cabs(yd))
            if m > rescale_threshold or (0.0 < m < 1.0 / rescale_threshold):
                inv = 1.0 / m
                yu *= inv; yd *= inv
                fu *= inv; fd *= inv
                dlog += log(m)
            if err == 0.0:
                factor = MAX_FACTOR
            else:
                factor = fmin(MAX_FACTOR, SAFETY * pow(err, -0.2))
        else:
            factor = fmax(MIN_FACTOR, SAFETY * pow(err, -0.2))
        h *= factor
        if fabs(h) > max_step:
            h = direction * max_step
    return yu, yd, dlog, x, 1

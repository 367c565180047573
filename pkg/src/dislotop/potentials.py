"""Periodic potentials, switch functions, and dislocation families.

A potential is a finite trigonometric series, which keeps derivatives and
Fourier data exact. The switch function chi is piecewise linear: 1 to the
left of its first breakpoint, 0 to the right of its last one.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Iterable

import numpy as np

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class TrigPotential:
    """1-periodic potential  V(x) = c + sum_j a_j cos(2 pi j x) + b_j sin(2 pi j x)."""

    constant: float = 0.0
    cos_coeffs: tuple[float, ...] = ()
    sin_coeffs: tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "constant", float(self.constant))
        object.__setattr__(self, "cos_coeffs", tuple(float(a) for a in self.cos_coeffs))
        object.__setattr__(self, "sin_coeffs", tuple(float(b) for b in self.sin_coeffs))

    def __call__(self, x):
        v = self.constant + 0.0 * np.asarray(x, dtype=float) if np.ndim(x) else self.constant
        for j, a in enumerate(self.cos_coeffs, start=1):
            v = v + a * np.cos(TWO_PI * j * x)
        for j, b in enumerate(self.sin_coeffs, start=1):
            v = v + b * np.sin(TWO_PI * j * x)
        return v

    def derivative(self, x):
        dv = 0.0 * np.asarray(x, dtype=float) if np.ndim(x) else 0.0
        for j, a in enumerate(self.cos_coeffs, start=1):
            dv = dv - a * TWO_PI * j * np.sin(TWO_PI * j * x)
        for j, b in enumerate(self.sin_coeffs, start=1):
            dv = dv + b * TWO_PI * j * np.cos(TWO_PI * j * x)
        return dv

    def fourier_coefficient(self, m: int) -> complex:
        """Coefficient v_m of exp(2 pi i m x); v_{-m} = conj(v_m) for real V."""
        if m == 0:
            return complex(self.constant)
        j = abs(m)
        a = self.cos_coeffs[j - 1] if j <= len(self.cos_coeffs) else 0.0
        b = self.sin_coeffs[j - 1] if j <= len(self.sin_coeffs) else 0.0
        if m > 0:
            return 0.5 * (a - 1j * b)
        return 0.5 * (a + 1j * b)

    @property
    def n_harmonics(self) -> int:
        return max(len(self.cos_coeffs), len(self.sin_coeffs))

    @property
    def sup_norm_bound(self) -> float:
        """Upper bound on |V|: |c| + sum |a_j| + |b_j|."""
        return abs(self.constant) + sum(map(abs, self.cos_coeffs)) + sum(map(abs, self.sin_coeffs))

    @cached_property
    def _arrays(self) -> tuple[float, np.ndarray, np.ndarray]:
        n = self.n_harmonics
        a = np.zeros(n)
        b = np.zeros(n)
        a[: len(self.cos_coeffs)] = self.cos_coeffs
        b[: len(self.sin_coeffs)] = self.sin_coeffs
        return self.constant, a, b

    def as_arrays(self):
        """(constant, cos array, sin array) padded to a common length, for the kernels."""
        return self._arrays


@dataclass(frozen=True)
class SwitchFunction:
    """Piecewise-linear cutoff: 1 for x <= left end, 0 for x >= right end.

    ``breakpoints`` are (x, value) pairs with non-decreasing x; coincident x
    encodes a jump (the sharp-interface cutoff 1(x<0) is ((0,1),(0,0))).
    """

    breakpoints: tuple[tuple[float, float], ...]

    def __post_init__(self):
        bps = tuple((float(x), float(v)) for x, v in self.breakpoints)
        if len(bps) < 2:
            raise ValueError("switch function needs at least two breakpoints")
        xs = [x for x, _ in bps]
        if any(x1 > x2 for x1, x2 in zip(xs, xs[1:])):
            raise ValueError("breakpoints must be non-decreasing in x")
        if any(not (0.0 <= v <= 1.0) for _, v in bps):
            raise ValueError("switch values must lie in [0, 1]")
        if bps[0][1] != 1.0 or bps[-1][1] != 0.0:
            raise ValueError("switch must start at value 1 and end at value 0")
        object.__setattr__(self, "breakpoints", bps)

    @property
    def left_end(self) -> float:
        return self.breakpoints[0][0]

    @property
    def right_end(self) -> float:
        return self.breakpoints[-1][0]

    def __call__(self, x: float) -> float:
        if x <= self.left_end:
            return 1.0
        if x >= self.right_end:
            return 0.0
        bps = self.breakpoints
        for (x0, v0), (x1, v1) in zip(bps, bps[1:]):
            if x0 <= x <= x1:
                if x1 == x0:
                    continue
                return v0 + (v1 - v0) * (x - x0) / (x1 - x0)
        return 0.0

    def kinks(self) -> tuple[float, ...]:
        """Non-smooth points, deduplicated."""
        seen = []
        for x, _ in self.breakpoints:
            if not seen or x > seen[-1]:
                seen.append(x)
        return tuple(seen)

    def segments(self, lo: float, hi: float) -> list[tuple[float, float, float, float]]:
        """Affine pieces (a, b, alpha, beta) with chi(x) = alpha + beta*x on [a, b],
        covering [lo, hi] (lo < hi)."""
        if not lo < hi:
            raise ValueError("need lo < hi")
        cuts = [lo] + [x for x in self.kinks() if lo < x < hi] + [hi]
        out = []
        for a, b in zip(cuts, cuts[1:]):
            xm = 0.5 * (a + b)
            if xm <= self.left_end:
                out.append((a, b, 1.0, 0.0))
            elif xm >= self.right_end:
                out.append((a, b, 0.0, 0.0))
            else:
                bps = self.breakpoints
                for (x0, v0), (x1, v1) in zip(bps, bps[1:]):
                    if x0 <= xm <= x1 and x1 > x0:
                        beta = (v1 - v0) / (x1 - x0)
                        out.append((a, b, v0 - beta * x0, beta))
                        break
                else:  # inside a jump; treat as already-switched value
                    out.append((a, b, 0.0, 0.0))
        return out


# The cutoff used throughout the numerical experiments: linear ramp on [-1/2, 1/2].
PAPER_CHI = SwitchFunction(((-0.5, 1.0), (0.5, 0.0)))


class DislocationKind(Enum):
    BULK = "bulk"
    DOMAIN_WALL = "domain_wall"
    DIRICHLET = "dirichlet"


@dataclass(frozen=True)
class DislocationParams:
    """Dislocation parameter t (taken modulo 1) and which operator family it drives."""

    t: float
    kind: DislocationKind = DislocationKind.BULK

    def __post_init__(self):
        object.__setattr__(self, "t", float(self.t) % 1.0)


def eval_bulk(V: TrigPotential, t: float, x: float):
    """Translated potential V_t(x) = V(x - t)."""
    return V(np.asarray(x) - t) if np.ndim(x) else V(x - t)


def eval_edge(V: TrigPotential, chi: SwitchFunction, t: float, x: float) -> float:
    """Domain-wall potential V(x) chi(x) + V(x - t) (1 - chi(x))."""
    c = chi(x)
    return V(x) * c + V(x - t) * (1.0 - c)


def breakpoints(chi: SwitchFunction, window: tuple[float, float]) -> list[float]:
    """Non-smooth points of the domain-wall potential inside a finite window."""
    lo, hi = window
    return [x for x in chi.kinks() if lo < x < hi]


@dataclass(frozen=True)
class DiracMassProfile:
    """Mass pair (m1, m2) of the dislocated Dirac operator.

    m1(x) = V(x) [chi(x) + (1 - chi(x)) cos(2 pi t)],
    m2(x) = -V(x) (1 - chi(x)) sin(2 pi t).
    A missing chi means the pure bulk family (chi = 0 everywhere).
    """

    V: TrigPotential
    t: float
    chi: SwitchFunction | None = None

    def chi_value(self, x: float) -> float:
        return self.chi(x) if self.chi is not None else 0.0

    def m1(self, x: float) -> float:
        c = self.chi_value(x)
        return self.V(x) * (c + (1.0 - c) * math.cos(TWO_PI * self.t))

    def m2(self, x: float) -> float:
        c = self.chi_value(x)
        return -self.V(x) * (1.0 - c) * math.sin(TWO_PI * self.t)


# Potentials used for the reference runs.
REFERENCE_SCHRODINGER = TrigPotential(0.0, (50.0, 10.0))
REFERENCE_DIRAC = TrigPotential(1.0, (1.0,))

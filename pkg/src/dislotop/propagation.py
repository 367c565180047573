"""ODE propagation for the Hill equation -u'' + W u = E u and the dislocated
Dirac system, plus unit-cell transfer matrices and discriminants.

States carry a log-scale factor: the true solution is (u, u') * exp(log_scale).
Integration is split at the kinks of the switch function, so each kernel call
sees a smooth right-hand side.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from dislotop import _kernels
from dislotop.potentials import SwitchFunction, TrigPotential


class IntegrationError(RuntimeError):
    """Adaptive stepping failed; x_reached is the last point attained."""

    def __init__(self, message: str, x_reached: float):
        super().__init__(f"{message} (last good x = {x_reached!r})")
        self.x_reached = x_reached


@dataclass(frozen=True)
class PropagationSettings:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_step: float = 0.05
    rescale_threshold: float = 1e6

    def __post_init__(self):
        for name in ("rel_tol", "abs_tol", "max_step", "rescale_threshold"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


DEFAULT_SETTINGS = PropagationSettings()


@dataclass(frozen=True)
class HillState:
    u: float
    du: float
    log_scale: float = 0.0

    def values(self) -> tuple[float, float]:
        s = math.exp(self.log_scale)
        return self.u * s, self.du * s

    @property
    def theta(self) -> complex:
        """Direction on the circle: (u' - iu)/(u' + iu); scale invariant."""
        if self.u == 0.0 and self.du == 0.0:
            raise ValueError("theta undefined for the null state")
        z = complex(self.du, self.u)
        return z.conjugate() / z


@dataclass(frozen=True)
class DiracState:
    up: complex
    down: complex
    log_scale: float = 0.0

    def values(self) -> tuple[complex, complex]:
        s = math.exp(self.log_scale)
        return self.up * s, self.down * s

    @property
    def theta(self) -> complex:
        """Spinor direction down/up; unit modulus on decaying-space solutions."""
        if self.up == 0:
            raise ValueError("theta undefined: upper component vanishes")
        return self.down / self.up


@dataclass(frozen=True)
class TransferMatrixR:
    entries: np.ndarray  # 2x2 real
    E: float

    @property
    def det_defect(self) -> float:
        return abs(float(np.linalg.det(self.entries)) - 1.0)

    @property
    def trace(self) -> float:
        return float(self.entries[0, 0] + self.entries[1, 1])


@dataclass(frozen=True)
class TransferMatrixC:
    entries: np.ndarray  # 2x2 complex
    E: float

    @property
    def det_defect(self) -> float:
        return abs(complex(np.linalg.det(self.entries)) - 1.0)

    @property
    def trace(self) -> complex:
        return complex(self.entries[0, 0] + self.entries[1, 1])


_EMPTY = np.zeros(0)


def _segments_for(chi: SwitchFunction | None, x0: float, x1: float):
    """Affine chi pieces along the (possibly reversed) path from x0 to x1."""
    if x0 == x1:
        return []
    if chi is None:
        return [(x0, x1, 0.0, 0.0)]
    lo, hi = (x0, x1) if x0 < x1 else (x1, x0)
    segs = chi.segments(lo, hi)
    if x0 < x1:
        return segs
    return [(b, a, al, be) for (a, b, al, be) in reversed(segs)]


def propagate_hill(state: HillState, V: TrigPotential, t: float, E: float,
                   x_from: float, x_to: float,
                   settings: PropagationSettings = DEFAULT_SETTINGS,
                   chi: SwitchFunction | None = None) -> HillState:
    """Solution pair at x_to given data at x_from. Without chi the potential is
    the translated bulk V(. - t); with chi it is the domain-wall interpolation."""
    t = t % 1.0
    vc, va, vb = V.as_arrays()
    u, du, logs = state.u, state.du, state.log_scale
    for a, b, alpha, beta in _segments_for(chi, x_from, x_to):
        u, du, dlog, x_reached, status = _kernels.hill_segment(
            u, du, a, b, E, t, vc, va, vb, alpha, beta,
            settings.rel_tol, settings.abs_tol, settings.max_step,
            settings.rescale_threshold)
        logs += dlog
        if status != 0:
            raise IntegrationError("step-size underflow in Hill propagation", x_reached)
    return HillState(u, du, logs)


def propagate_dirac(state: DiracState, V: TrigPotential, t: float, E: float,
                    x_from: float, x_to: float,
                    settings: PropagationSettings = DEFAULT_SETTINGS,
                    chi: SwitchFunction | None = None) -> DiracState:
    """Dirac analog of propagate_hill; without chi the masses rotate rigidly
    with t, with chi they interpolate across the wall."""
    t = t % 1.0
    vc, va, vb = V.as_arrays()
    up, dn, logs = complex(state.up), complex(state.down), state.log_scale
    for a, b, alpha, beta in _segments_for(chi, x_from, x_to):
        up, dn, dlog, x_reached, status = _kernels.dirac_segment(
            up, dn, a, b, E, t, vc, va, vb, alpha, beta,
            settings.rel_tol, settings.abs_tol, settings.max_step,
            settings.rescale_threshold)
        logs += dlog
        if status != 0:
            raise IntegrationError("step-size underflow in Dirac propagation", x_reached)
    return DiracState(up, dn, logs)


@lru_cache(maxsize=65536)
def _monodromy_hill_cached(V: TrigPotential, t: float, E: float, start: float,
                           settings: PropagationSettings):
    cols = []
    for u0, du0 in ((1.0, 0.0), (0.0, 1.0)):
        s = propagate_hill(HillState(u0, du0), V, t, E, start, start + 1.0, settings)
        u, du = s.values()
        cols.append((u, du))
    return (cols[0][0], cols[1][0], cols[0][1], cols[1][1])


def monodromy_hill(V: TrigPotential, t: float, E: float,
                   settings: PropagationSettings = DEFAULT_SETTINGS,
                   start: float = 0.0) -> TransferMatrixR:
    """Transfer matrix of the bulk potential V(. - t) over [start, start + 1];
    columns are the fundamental solutions with (u, u')(start) = (1,0) and (0,1)."""
    a, b, c, d = _monodromy_hill_cached(V, t % 1.0, E, start, settings)
    return TransferMatrixR(np.array([[a, b], [c, d]]), E)


@lru_cache(maxsize=65536)
def _monodromy_dirac_cached(V: TrigPotential, t: float, E: float, start: float,
                            settings: PropagationSettings):
    cols = []
    for up0, dn0 in ((1.0 + 0.0j, 0.0j), (0.0j, 1.0 + 0.0j)):
        s = propagate_dirac(DiracState(up0, dn0), V, t, E, start, start + 1.0, settings)
        up, dn = s.values()
        cols.append((up, dn))
    return (cols[0][0], cols[1][0], cols[0][1], cols[1][1])


def monodromy_dirac(V: TrigPotential, t: float, E: float,
                    settings: PropagationSettings = DEFAULT_SETTINGS,
                    start: float = 0.0) -> TransferMatrixC:
    a, b, c, d = _monodromy_dirac_cached(V, t % 1.0, E, start, settings)
    return TransferMatrixC(np.array([[a, b], [c, d]]), E)


def discriminant(V: TrigPotential, E: float,
                 settings: PropagationSettings = DEFAULT_SETTINGS) -> float:
    """Trace of the unit-cell transfer matrix; bands are where it lies in [-2, 2]."""
    return monodromy_hill(V, 0.0, E, settings).trace


def dirac_discriminant(V: TrigPotential, E: float,
                       settings: PropagationSettings = DEFAULT_SETTINGS) -> float:
    """Real part of the Dirac unit-cell trace (the trace is real up to solver error)."""
    tr = monodromy_dirac(V, 0.0, E, settings).trace
    return tr.real


def clear_caches():
    _monodromy_hill_cached.cache_clear()
    _monodromy_dirac_cached.cache_clear()

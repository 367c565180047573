"""Band edges, gaps, and Floquet (decaying/growing) data of the bulk operators.

Band edges are located on the discriminant: bands are where |Delta(E)| <= 2,
edges are roots of Delta = +-2. Closed gaps show up as tangencies (Delta
touches +-2 without crossing); those are detected at refined extrema of Delta
and reported as coincident edges. The discriminant is computed to roughly the
propagation tolerance, so gaps narrower than ~sqrt(tol) at high energy cannot
be certified open; they are reported closed (see module notes in the README).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from dislotop.potentials import TrigPotential
from dislotop.propagation import (
    DEFAULT_SETTINGS,
    PropagationSettings,
    TransferMatrixC,
    TransferMatrixR,
    monodromy_dirac,
    monodromy_hill,
)

GAP_TOL = 1e-8
# |Delta| - 2 below this at an extremum counts as a tangency (closed gap)
TANGENCY_TOL = 1e-8


class EnergyInBandError(ValueError):
    """Requested a gap-only quantity at an energy inside a band."""


class WindowTooSmallError(RuntimeError):
    """Search window could not be grown to contain the requested bands."""


@dataclass(frozen=True)
class GapTable:
    """Band edges (E_n^-, E_n^+) and the gaps between them; gap 0 is (-inf, E_1^-)."""

    band_edges: tuple[tuple[float, float], ...]
    gap_tol: float = GAP_TOL

    @property
    def n_bands(self) -> int:
        return len(self.band_edges)

    def gap(self, n: int) -> tuple[float, float]:
        if n == 0:
            return (-math.inf, self.band_edges[0][0])
        return (self.band_edges[n - 1][1], self.band_edges[n][0])

    def gap_width(self, n: int) -> float:
        lo, hi = self.gap(n)
        return hi - lo

    def is_open(self, n: int) -> bool:
        if n == 0:
            return True
        return self.gap_width(n) > self.gap_tol

    def midpoint(self, n: int) -> float:
        lo, hi = self.gap(n)
        if n == 0:
            return hi - 1.0
        return 0.5 * (lo + hi)

    def open_gaps(self) -> list[int]:
        return [n for n in range(1, self.n_bands) if self.is_open(n)]

    def csv_rows(self) -> list[tuple]:
        rows = []
        for n in range(1, self.n_bands):
            em, ep = self.band_edges[n - 1]
            lo, hi = self.gap(n)
            rows.append((n, em, ep, lo, hi, self.is_open(n)))
        return rows


@dataclass(frozen=True)
class FloquetSplit:
    """Eigen-decomposition of a unit-cell transfer matrix at a gap energy."""

    lambda_decay: float
    v_decay: np.ndarray
    lambda_grow: float
    v_grow: np.ndarray
    E: float


def _eigvec_2x2(entries: np.ndarray, lam) -> np.ndarray:
    a, b = entries[0, 0], entries[0, 1]
    c, d = entries[1, 0], entries[1, 1]
    v1 = np.array([b, lam - a])
    v2 = np.array([lam - d, c])
    v = v1 if np.linalg.norm(v1) >= np.linalg.norm(v2) else v2
    nrm = np.linalg.norm(v)
    if nrm == 0.0:  # defective; cannot happen off the band edges
        raise EnergyInBandError("transfer matrix defective: energy at a band edge")
    v = v / nrm
    # deterministic orientation: first non-negligible component positive
    for comp in v:
        if abs(comp) > 1e-12:
            phase = comp / abs(comp)
            return v / phase
    return v


def _split_from_matrix(T, in_band_tol: float = 1e-12) -> FloquetSplit:
    tr = T.trace
    tr = tr.real if isinstance(tr, complex) else tr
    if abs(tr) <= 2.0 + in_band_tol:
        raise EnergyInBandError(
            f"|Delta(E)| = {abs(tr):.12g} <= 2: E={T.E!r} lies in a band")
    s = 1.0 if tr > 0 else -1.0
    lam_grow = 0.5 * (tr + s * math.sqrt(tr * tr - 4.0))
    lam_decay = 1.0 / lam_grow
    return FloquetSplit(
        lambda_decay=lam_decay,
        v_decay=_eigvec_2x2(T.entries, lam_decay),
        lambda_grow=lam_grow,
        v_grow=_eigvec_2x2(T.entries, lam_grow),
        E=T.E,
    )


def floquet_split(V: TrigPotential, t: float, E: float,
                  settings: PropagationSettings = DEFAULT_SETTINGS,
                  start: float = 0.0) -> FloquetSplit:
    """Decaying/growing directions of the translated-potential monodromy at x=start.

    v_decay is the (u, u') data of the solution decaying at +infinity;
    v_grow decays at -infinity. Requires E in an open gap.
    """
    return _split_from_matrix(monodromy_hill(V, t, E, settings, start=start))


def dirac_floquet_split(V: TrigPotential, t: float, E: float,
                        settings: PropagationSettings = DEFAULT_SETTINGS,
                        start: float = 0.0) -> FloquetSplit:
    """Dirac analog; eigenvalues are real in a gap although the matrix is complex."""
    return _split_from_matrix(monodromy_dirac(V, t, E, settings, start=start))


def _scan_extrema_and_crossings(f, grid: np.ndarray, refine_xtol: float):
    """Refined extrema of f and the +-2 crossings on its monotone pieces.

    Returns (extrema, edges): extrema as (E, f(E)) and edges as (E, level) with
    level in {+2, -2}, both sorted in E.
    """
    vals = np.array([f(e) for e in grid])
    diffs = np.diff(vals)
    extrema = []
    for i in range(len(diffs) - 1):
        if diffs[i] == 0.0 or diffs[i] * diffs[i + 1] < 0.0:
            a, b = grid[i], grid[i + 2]
            sign = -1.0 if diffs[i] > 0 else 1.0  # minimize -f at a max
            res = minimize_scalar(lambda e: sign * f(e), bounds=(a, b),
                                  method="bounded",
                                  options={"xatol": refine_xtol})
            extrema.append((float(res.x), float(sign * res.fun)))
    # monotone pieces between consecutive extrema (and the grid ends)
    knots = [float(grid[0])] + [e for e, _ in extrema] + [float(grid[-1])]
    knot_vals = [float(vals[0])] + [v for _, v in extrema] + [float(vals[-1])]
    edges = []
    for (a, fa), (b, fb) in zip(zip(knots, knot_vals), zip(knots[1:], knot_vals[1:])):
        if b <= a:
            continue
        for level in (2.0, -2.0):
            if (fa - level) * (fb - level) < 0.0:
                root = brentq(lambda e: f(e) - level, a, b, xtol=refine_xtol)
                edges.append((float(root), level))
    edges.sort()
    extrema.sort()
    return extrema, edges


def _merge_tangencies(extrema, edges, tangency_tol: float):
    """Turn tangential touches of +-2 into coincident (closed-gap) edge pairs.

    An extremum with | |f| - 2 | <= tol is a closed gap: any crossing pair it
    produced by numerical overshoot is removed and replaced by a double edge.
    """
    out = list(edges)
    for e_x, e_v in extrema:
        if abs(e_v) < 2.0 - tangency_tol or abs(abs(e_v) - 2.0) > tangency_tol:
            continue
        level = 2.0 if e_v > 0 else -2.0
        # drop spurious crossings of this level immediately around the extremum
        near = [ed for ed in out if ed[1] == level and abs(ed[0] - e_x) < _tangency_window(e_x, extrema)]
        for ed in near:
            out.remove(ed)
        out.append((e_x, level))
        out.append((e_x, level))
    out.sort()
    return out


def _tangency_window(e_x: float, extrema) -> float:
    gaps = [abs(e_x - other) for other, _ in extrema if other != e_x]
    nearest = min(gaps) if gaps else 1.0
    return 0.5 * nearest


def band_edges(V: TrigPotential, n_max: int,
               search_window: tuple[float, float] | None = None,
               settings: PropagationSettings = DEFAULT_SETTINGS,
               gap_tol: float = GAP_TOL,
               cross_validate: bool = False,
               max_expansions: int = 6) -> GapTable:
    """Locate the first n_max+1 bands of -d^2/dx^2 + V by a discriminant scan
    plus bisection of Delta = +-2 to ~1e-10.

    With cross_validate=True the edges are checked against plane-wave Bloch
    eigenvalues at k = 0 and k = 1/2 (an unrelated algorithm).
    """
    from dislotop.propagation import discriminant

    bound = V.sup_norm_bound
    e_lo = -bound - 1.0
    if search_window is not None:
        e_lo = min(e_lo, search_window[0])
        e_hi = search_window[1]
    else:
        e_hi = (math.pi * (n_max + 1)) ** 2 + bound + 10.0

    f = lambda E: discriminant(V, E, settings)
    for _ in range(max_expansions + 1):
        s_max = math.sqrt(e_hi - e_lo)
        n_s = max(64, int(s_max / 0.05))
        grid = e_lo + np.linspace(0.0, s_max, n_s) ** 2
        extrema, edges = _scan_extrema_and_crossings(f, grid, refine_xtol=1e-10)
        edges = _merge_tangencies(extrema, edges, TANGENCY_TOL)
        if len(edges) >= 2 * (n_max + 1):
            break
        e_hi = e_lo + 2.0 * (e_hi - e_lo)
    else:
        raise WindowTooSmallError(
            f"found {len(edges) // 2} bands below E={e_hi:g}, needed {n_max + 1}")

    bands = []
    for i in range(n_max + 1):
        (em, lv_m), (ep, lv_p) = edges[2 * i], edges[2 * i + 1]
        if lv_m == lv_p and em != ep:
            raise RuntimeError(
                f"band {i + 1} edges hit the same discriminant level {lv_m:+g}; "
                "scan under-resolved")
        bands.append((em, ep))

    table = GapTable(tuple(bands), gap_tol=gap_tol)
    for n in range(1, n_max + 1):
        w = table.gap_width(n)
        if 0.0 < w <= gap_tol:
            warnings.warn(f"gap {n} narrower than gap_tol ({w:g}); reported closed")
    if cross_validate:
        _cross_validate_edges(V, table, settings)
    return table


def _cross_validate_edges(V: TrigPotential, table: GapTable,
                          settings: PropagationSettings, tol: float = 1e-6,
                          cutoff: int = 48):
    """Compare discriminant edges with plane-wave Bloch eigenvalues at k=0, 1/2."""
    from dislotop.chern import bloch_eigenvalues

    n_b = table.n_bands
    eig0 = bloch_eigenvalues(V, 0.0, 0.0, n_b + 1, cutoff)
    eig_half = bloch_eigenvalues(V, 0.0, 0.5, n_b + 1, cutoff)
    # periodic eigenvalues carry edges {E_1^-, E_2^+, E_3^-, ...},
    # antiperiodic ones {E_1^+, E_2^-, E_3^+, ...}
    expect0, expect_half = [], []
    for n, (em, ep) in enumerate(table.band_edges, start=1):
        if n % 2 == 1:
            expect0.append(em)
            expect_half.append(ep)
        else:
            expect0.append(ep)
            expect_half.append(em)
    for got, want in ((eig0, sorted(expect0)), (eig_half, sorted(expect_half))):
        for w_i, g_i in zip(want, got):
            if abs(w_i - g_i) > tol:
                raise RuntimeError(
                    f"Bloch cross-validation failed: edge {w_i!r} vs fiber {g_i!r}")


@dataclass(frozen=True)
class DiracGapTable:
    """Open gaps of the bulk Dirac operator inside a finite window."""

    window: tuple[float, float]
    gaps: tuple[tuple[float, float], ...]  # open gaps fully inside the window
    gap_tol: float = GAP_TOL

    def gap_containing(self, E: float) -> tuple[float, float] | None:
        for lo, hi in self.gaps:
            if lo < E < hi:
                return (lo, hi)
        return None

    def symmetry_defect(self) -> float:
        """Hausdorff-type mismatch between the gap set and its reflection."""
        worst = 0.0
        for lo, hi in self.gaps:
            best = min(
                max(abs(lo + rhi), abs(hi + rlo)) for rlo, rhi in self.gaps)
            worst = max(worst, best)
        return worst

    def csv_rows(self) -> list[tuple]:
        return [(i + 1, lo, hi) for i, (lo, hi) in enumerate(self.gaps)]


def dirac_gap_table(V: TrigPotential, window: tuple[float, float],
                    settings: PropagationSettings = DEFAULT_SETTINGS,
                    gap_tol: float = GAP_TOL) -> DiracGapTable:
    """Open gaps of the Dirac operator in the window, from |Tr T_E| > 2."""
    from dislotop.propagation import dirac_discriminant

    lo, hi = window
    n_grid = max(128, int((hi - lo) / 0.02))
    grid = np.linspace(lo, hi, n_grid)
    f = lambda E: dirac_discriminant(V, E, settings)
    extrema, edges = _scan_extrema_and_crossings(f, grid, refine_xtol=1e-10)
    edges = _merge_tangencies(extrema, edges, TANGENCY_TOL)

    vals_start = f(float(grid[0]))
    gaps = []
    # walk the edge list; between an exit from |D|<=2 and the next entry lies a gap
    inside_band = abs(vals_start) <= 2.0
    prev_exit = None if inside_band else float(grid[0])
    for e_x, _ in edges:
        if inside_band:
            prev_exit = e_x
            inside_band = False
        else:
            if prev_exit is not None and prev_exit > lo and e_x - prev_exit > gap_tol:
                gaps.append((prev_exit, e_x))
            inside_band = True
    return DiracGapTable(window=(lo, hi), gaps=tuple(gaps), gap_tol=gap_tol)

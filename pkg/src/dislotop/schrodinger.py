"""Bulk Maslov index, edge quantity, edge eigenvalues, and spectral flows for
the dislocated Schrodinger family.

The direction of a solution is tracked on the circle through
theta = (u' - iu)/(u' + iu); theta = 1 exactly at zeros of u. The bulk index
is the t-winding of theta of the +infinity-decaying space; the edge quantity
Omega is the ratio of the thetas of the two decaying spaces of the domain-wall
operator and equals 1 precisely at edge eigenvalues. Flows count signed
passages of eigenvalue branches through a regular gap energy, downward
positive.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from dislotop import _flows
from dislotop.potentials import SwitchFunction, TrigPotential
from dislotop.propagation import (
    DEFAULT_SETTINGS,
    HillState,
    PropagationSettings,
    propagate_hill,
)
from dislotop.spectrum import GapTable, band_edges, floquet_split
from dislotop.winding import build_path, winding_number

NEAR_EDGE_TOL = 1e-6


class GapClosedError(ValueError):
    """Requested an index for a gap that is not open."""


def _t_path_samples(V: TrigPotential, E: float) -> int:
    """Initial sample count for windings over t.

    The phase of theta moves at most ~2(|V|_inf + |E| + 1) per unit t; keep the
    initial spacing well under a half-turn at that rate so hidden full turns
    cannot slip between samples (the midpoint check then closes the rest).
    """
    rate = 2.0 * (V.sup_norm_bound + abs(E) + 1.0)
    return max(32, int(rate / (3.0 * math.pi)) + 8)


class IndexMismatchError(RuntimeError):
    """Two quantities that must agree (e.g. the two Maslov indices) differ."""


def _require_open(table: GapTable, n: int) -> tuple[float, float]:
    if n < 0 or n >= table.n_bands:
        raise GapClosedError(f"gap {n} outside the computed table")
    if not table.is_open(n):
        raise GapClosedError(f"gap {n} is closed (width {table.gap_width(n):.3g})")
    return table.gap(n)


def decaying_state(V: TrigPotential, t: float, E: float, side: str,
                   settings: PropagationSettings = DEFAULT_SETTINGS,
                   start: float = 0.0) -> HillState:
    """Initial data at x=start of the bulk solution decaying at side-infinity."""
    fs = floquet_split(V, t, E, settings, start=start)
    v = fs.v_decay if side == "+" else fs.v_grow
    return HillState(float(v[0]), float(v[1]))


def theta_bulk(V: TrigPotential, t: float, E: float, x: float = 0.0,
               side: str = "+",
               settings: PropagationSettings = DEFAULT_SETTINGS) -> complex:
    """theta of the decaying space of the translated bulk operator at x."""
    state = decaying_state(V, t, E, side, settings)
    if x != 0.0:
        state = propagate_hill(state, V, t, E, 0.0, x, settings)
    return state.theta


def bulk_index(V: TrigPotential, n: int, gap_table: GapTable | None = None,
               E: float | None = None, x: float = 0.0,
               settings: PropagationSettings = DEFAULT_SETTINGS) -> int:
    """Winding over one t-period of theta of the +infinity-decaying space,
    evaluated at a fixed gap energy; the -infinity index is computed too and
    must agree."""
    table = gap_table if gap_table is not None else band_edges(V, max(n, 1), settings=settings)
    _require_open(table, n)
    if E is None:
        E = table.midpoint(n)
    n_init = _t_path_samples(V, E)
    m_plus = winding_number(build_path(
        lambda t: theta_bulk(V, t, E, x, "+", settings), init_samples=n_init))
    m_minus = winding_number(build_path(
        lambda t: theta_bulk(V, t, E, x, "-", settings), init_samples=n_init))
    if m_plus != m_minus:
        raise IndexMismatchError(
            f"Maslov indices disagree: M+ = {m_plus}, M- = {m_minus}")
    return m_plus


def zeros_in_cell(V: TrigPotential, t: float, E: float, side: str = "+",
                  settings: PropagationSettings = DEFAULT_SETTINGS,
                  n_samples: int = 400) -> int:
    """Number of zeros of the decaying bulk solution in one period, counted as
    sign changes on [0, 1) (window shifted by 1e-9, so a zero sitting exactly
    on the cell boundary is counted once)."""
    shift = 1e-9
    state = decaying_state(V, t, E, side, settings, start=0.0)
    xs = np.linspace(-shift, 1.0 - shift, n_samples + 1)
    here = propagate_hill(state, V, t, E, 0.0, float(xs[0]), settings)
    prev_x = float(xs[0])
    vals = [here.u]
    for x in xs[1:]:
        here = propagate_hill(here, V, t, E, prev_x, float(x), settings)
        prev_x = float(x)
        vals.append(here.u)
    vals = np.asarray(vals)
    scale = float(np.max(np.abs(vals)))
    count = 0
    prev_sign = 0.0
    for v in vals:
        # samples sitting numerically on a zero carry no sign; the neighbours
        # on either side still register exactly one change for a simple zero
        s = 0.0 if abs(v) < 1e-13 * scale else math.copysign(1.0, v)
        if prev_sign != 0.0 and s != 0.0 and s != prev_sign:
            count += 1
        if s != 0.0:
            prev_sign = s
    return count


# ---------------------------------------------------------------------------
# Domain-wall edge machinery
# ---------------------------------------------------------------------------

def _edge_state_right(V, chi, t, E, x, settings) -> HillState:
    """Solution of the domain-wall equation decaying at +infinity, at x."""
    L = chi.right_end
    state = decaying_state(V, t, E, "+", settings, start=L)
    return propagate_hill(state, V, t, E, L, x, settings, chi=chi)


def _edge_state_left(V, chi, t, E, x, settings) -> HillState:
    """Solution of the domain-wall equation decaying at -infinity, at x.

    The seed data comes from the untranslated bulk (the wall potential equals V
    left of the wall), but the march to x runs under the full wall potential at
    the actual parameter t.
    """
    L = chi.left_end
    state = decaying_state(V, 0.0, E, "-", settings, start=L)
    return propagate_hill(state, V, t, E, L, x, settings, chi=chi)


def omega(V: TrigPotential, chi: SwitchFunction, t: float, E: float,
          x: float = 0.0,
          settings: PropagationSettings = DEFAULT_SETTINGS) -> complex:
    """Edge quantity: theta of the +infinity-decaying space divided by theta of
    the -infinity-decaying one; equals 1 exactly at eigenvalues of the
    domain-wall operator. Matching point x = 0 balances growth from both walls.
    """
    th_p = _edge_state_right(V, chi, t, E, x, settings).theta
    th_m = _edge_state_left(V, chi, t, E, x, settings).theta
    return th_p / th_m


def edge_index(V: TrigPotential, chi: SwitchFunction, n: int,
               gap_table: GapTable | None = None, E: float | None = None,
               x: float = 0.0,
               settings: PropagationSettings = DEFAULT_SETTINGS) -> int:
    """Winding over one t-period of the edge quantity at a fixed gap energy."""
    table = gap_table if gap_table is not None else band_edges(V, max(n, 1), settings=settings)
    _require_open(table, n)
    if E is None:
        E = table.midpoint(n)
    return winding_number(build_path(lambda t: omega(V, chi, t, E, x, settings),
                                     init_samples=_t_path_samples(V, E)))


@dataclass(frozen=True)
class EdgeState:
    """Normalised edge eigenfunction sampled on a window around the wall.

    match_defect is the relative mismatch of the two half-solutions where they
    meet (zero in exact arithmetic at an eigenvalue).
    """

    E: float
    t: float
    xs: np.ndarray
    u: np.ndarray
    du: np.ndarray
    decay_rate_left: float
    decay_rate_right: float
    match_defect: float = 0.0
    near_edge: bool = False

    def l2_norm(self) -> float:
        return float(np.sqrt(np.trapezoid(self.u ** 2, self.xs)))


def _half_profile(V, chi, t, E, settings, anchor, seed, lam, x_match, x_far,
                  samples_per_cell):
    """Sample one half of an edge eigenfunction, stably.

    The wall part [x_match, anchor] is propagated directly (at most a couple of
    cells). The pure-bulk tail from the anchor outward is reseeded cell by cell
    with the exact Floquet multiplier, so the far tail never accumulates the
    contamination of the opposite mode. Returns (xs, u, du, log_scale) with xs
    ascending.
    """
    pts: list[tuple[float, float, float, float]] = []
    outward = 1.0 if x_far > anchor else -1.0

    # wall side: march from the anchor toward the matching point
    n_in = max(1, int(round(abs(anchor - x_match) * samples_per_cell)))
    here, prev = HillState(seed[0], seed[1]), anchor
    for x in np.linspace(anchor, x_match, n_in + 1):
        here = propagate_hill(here, V, t, E, prev, float(x), settings, chi=chi)
        prev = float(x)
        pts.append((float(x), here.u, here.du, here.log_scale))

    # tail: cell m starts from lam^m * seed (lam = outward multiplier per cell)
    n_cells = int(round(abs(x_far - anchor)))
    sign = 1.0 if lam >= 0 else -1.0
    log_abs = math.log(abs(lam))
    for m in range(n_cells):
        cell_log = m * log_abs
        cell_sign = sign ** m
        x0 = anchor + outward * m
        here, prev = HillState(cell_sign * seed[0], cell_sign * seed[1], cell_log), x0
        for k in range(1, samples_per_cell + 1):
            x = x0 + outward * k / samples_per_cell
            here = propagate_hill(here, V, t, E, prev, float(x), settings, chi=chi)
            prev = float(x)
            pts.append((float(x), here.u, here.du, here.log_scale))
    pts.sort(key=lambda p: p[0])
    xs = np.array([p[0] for p in pts])
    u = np.array([p[1] for p in pts])
    du = np.array([p[2] for p in pts])
    logs = np.array([p[3] for p in pts])
    return xs, u, du, logs


def _fit_decay_rate(xs, u, du, lo, hi, direction):
    """Log-slope of the solution envelope at whole-cell spacing in [lo, hi].

    At integer spacing the periodic modulation of a Floquet solution cancels,
    so the fitted slope is the Floquet exponent itself.
    """
    mask = (xs >= lo - 1e-12) & (xs <= hi + 1e-12)
    x_f = xs[mask]
    if len(x_f) < 2:
        return math.nan
    rel = x_f - x_f[0]
    cell = np.abs(rel - np.round(rel)) < 1e-9
    x_f = x_f[cell]
    env = np.hypot(u[mask][cell], du[mask][cell])
    good = env > 0
    if good.sum() < 2:
        return math.nan
    coef = np.polyfit(x_f[good], np.log(env[good]), 1)
    return -direction * float(coef[0])


def build_edge_state(V: TrigPotential, chi: SwitchFunction, t: float, E: float,
                     settings: PropagationSettings = DEFAULT_SETTINGS,
                     cells_out: int = 10, samples_per_cell: int = 16,
                     near_edge: bool = False, x_match: float = 0.0) -> EdgeState:
    """Eigenfunction profile over cells_out cells beyond each wall end, built
    by matched two-sided shooting and normalised to unit L2 norm.

    Each half is sampled in its stable direction (Floquet-reseeded tails), the
    left half is rescaled to agree with the right one at x_match, and the
    residual disagreement is recorded as match_defect.
    """
    fs_r = floquet_split(V, t, E, settings, start=chi.right_end)
    fs_l = floquet_split(V, 0.0, E, settings, start=chi.left_end)
    xr, ur, dur, lr = _half_profile(
        V, chi, t, E, settings, anchor=chi.right_end,
        seed=(float(fs_r.v_decay[0]), float(fs_r.v_decay[1])),
        lam=fs_r.lambda_decay, x_match=x_match,
        x_far=chi.right_end + cells_out, samples_per_cell=samples_per_cell)
    xl, ul, dul, ll = _half_profile(
        V, chi, t, E, settings, anchor=chi.left_end,
        seed=(float(fs_l.v_grow[0]), float(fs_l.v_grow[1])),
        lam=1.0 / fs_l.lambda_grow, x_match=x_match,
        x_far=chi.left_end - cells_out, samples_per_cell=samples_per_cell)

    # match the halves where they meet: scale the left one onto the right one
    wr = np.array([ur[0], dur[0]])
    wl = np.array([ul[-1], dul[-1]])
    log_shift = lr[0] - ll[-1]
    c = float(wr @ wl) / float(wl @ wl)
    defect = float(np.linalg.norm(wr - c * wl) / np.linalg.norm(wr))
    ul, dul = c * ul, c * dul
    ll = ll + log_shift

    xs = np.concatenate((xl[:-1], xr))
    logs = np.concatenate((ll[:-1], lr))
    scale = np.exp(logs - np.max(logs))
    u = np.concatenate((ul[:-1], ur)) * scale
    du = np.concatenate((dul[:-1], dur)) * scale
    nrm = float(np.sqrt(np.trapezoid(u ** 2, xs)))
    u, du = u / nrm, du / nrm
    rate_r = _fit_decay_rate(xs, u, du, chi.right_end + 1.0, float(xs[-1]), +1.0)
    rate_l = _fit_decay_rate(xs, u, du, float(xs[0]), chi.left_end - 1.0, -1.0)
    return EdgeState(E=E, t=t, xs=xs, u=u, du=du,
                     decay_rate_left=rate_l, decay_rate_right=rate_r,
                     match_defect=defect, near_edge=near_edge)


def edge_eigenvalue_energies(V: TrigPotential, chi: SwitchFunction, t: float,
                             n: int, gap_table: GapTable | None = None,
                             settings: PropagationSettings = DEFAULT_SETTINGS,
                             scan_points: int = 32, x: float = 0.0
                             ) -> list[float]:
    """In-gap eigenvalue energies of the domain-wall operator at fixed t,
    located as roots of the edge quantity on a refined energy scan. Roots
    closer than 1e-6 to a band edge are not searched for."""
    table = gap_table if gap_table is not None else band_edges(V, max(n, 1), settings=settings)
    lo, hi = _require_open(table, n)
    roots = _flows.scan_unit_roots(
        lambda E: omega(V, chi, t, E, x, settings),
        lo + NEAR_EDGE_TOL, hi - NEAR_EDGE_TOL, init_samples=scan_points)
    return [e for e, _ in roots]


def edge_eigenvalues_at(V: TrigPotential, chi: SwitchFunction, t: float, n: int,
                        gap_table: GapTable | None = None,
                        settings: PropagationSettings = DEFAULT_SETTINGS,
                        scan_points: int = 32,
                        ) -> list[tuple[float, EdgeState]]:
    """Edge eigenvalues in gap n at parameter t, each with its normalised
    eigenfunction; eigenvalues within 1e-4 of a band edge carry the
    reduced-confidence flag."""
    table = gap_table if gap_table is not None else band_edges(V, max(n, 1), settings=settings)
    lo, hi = _require_open(table, n)
    energies = edge_eigenvalue_energies(V, chi, t, n, table, settings, scan_points)
    out = []
    for e in energies:
        flag = min(e - lo, hi - e) < 1e-4
        out.append((e, build_edge_state(V, chi, t, e, settings, near_edge=flag)))
    return out


def spectral_flow_domain_wall(V: TrigPotential, chi: SwitchFunction, n: int,
                              gap_table: GapTable | None = None,
                              settings: PropagationSettings = DEFAULT_SETTINGS,
                              t_points: int = 400, stabilize: bool = True,
                              scan_points: int = 32,
                              check_edge_index: bool = True) -> int:
    """Net number of domain-wall eigenvalue branches crossing a regular gap
    energy downwards over one t-period; asserted equal to the edge index."""
    table = gap_table if gap_table is not None else band_edges(V, max(n, 1), settings=settings)
    gap = _require_open(table, n)

    def roots_at(t: float) -> list[float]:
        return edge_eigenvalue_energies(V, chi, t, n, table, settings, scan_points)

    flow, _, _ = _flows.spectral_flow(roots_at, gap, t_points, stabilize)
    if check_edge_index:
        idx = edge_index(V, chi, n, table, settings=settings)
        if flow != idx:
            raise IndexMismatchError(
                f"spectral flow {flow} != edge index {idx} in gap {n}")
    return flow


def domain_wall_branches(V: TrigPotential, chi: SwitchFunction, n: int,
                         gap_table: GapTable | None = None,
                         settings: PropagationSettings = DEFAULT_SETTINGS,
                         t_points: int = 200, scan_points: int = 32
                         ) -> list[_flows.Branch]:
    """Eigenvalue branches of the domain-wall operator over one t-period
    (for sweeps and figures)."""
    table = gap_table if gap_table is not None else band_edges(V, max(n, 1), settings=settings)
    gap = _require_open(table, n)
    ts = np.linspace(0.0, 1.0, t_points + 1)
    return _flows.trace_branches(
        lambda t: edge_eigenvalue_energies(V, chi, t, n, table, settings, scan_points),
        ts, match_tol=12.0 * (gap[1] - gap[0]) / t_points)


# ---------------------------------------------------------------------------
# Dirichlet half-line family
# ---------------------------------------------------------------------------

def _dirichlet_theta(V, t, E, settings, resonant):
    side = "-" if resonant else "+"
    return theta_bulk(V, t, E, 0.0, side, settings)


def dirichlet_eigenvalues_at(V: TrigPotential, t: float, n: int,
                             gap_table: GapTable | None = None,
                             settings: PropagationSettings = DEFAULT_SETTINGS,
                             scan_points: int = 32, resonant: bool = False
                             ) -> list[float]:
    """In-gap eigenvalues of the half-line Dirichlet operator at fixed t: gap
    energies where the +infinity-decaying solution of the translated bulk
    potential vanishes at the origin (theta = 1). With resonant=True the
    -infinity-decaying solution is used instead (resonant states)."""
    table = gap_table if gap_table is not None else band_edges(V, max(n, 1), settings=settings)
    lo, hi = _require_open(table, n)
    roots = _flows.scan_unit_roots(
        lambda E: _dirichlet_theta(V, t, E, settings, resonant),
        lo + NEAR_EDGE_TOL, hi - NEAR_EDGE_TOL, init_samples=scan_points)
    return [e for e, _ in roots]


def dirichlet_spectral_flow(V: TrigPotential, n: int,
                            gap_table: GapTable | None = None,
                            settings: PropagationSettings = DEFAULT_SETTINGS,
                            t_points: int = 400, stabilize: bool = True,
                            scan_points: int = 32, resonant: bool = False
                            ) -> tuple[int, dict]:
    """Dirichlet spectral flow in gap n plus a monotonicity report: every
    sampled eigenvalue branch must be decreasing (increasing for resonant
    states). Returns (flow, report); report holds the extreme slope per branch.
    """
    table = gap_table if gap_table is not None else band_edges(V, max(n, 1), settings=settings)
    gap = _require_open(table, n)

    def roots_at(t: float) -> list[float]:
        return dirichlet_eigenvalues_at(V, t, n, table, settings, scan_points,
                                        resonant=resonant)

    flow, branches, e_reg = _flows.spectral_flow(roots_at, gap, t_points, stabilize)
    slopes = {}
    monotone = True
    for k, b in enumerate(branches):
        if len(b.ts) < 2:
            continue
        s = b.slopes()
        worst = float(np.max(s)) if not resonant else float(np.min(s))
        slopes[k] = worst
        if (not resonant and worst >= 0.0) or (resonant and worst <= 0.0):
            monotone = False
    report = {"branch_extreme_slopes": slopes, "monotone": monotone,
              "counting_energy": e_reg, "n_branches": len(branches)}
    return flow, report


def dirichlet_branches(V: TrigPotential, n: int,
                       gap_table: GapTable | None = None,
                       settings: PropagationSettings = DEFAULT_SETTINGS,
                       t_points: int = 200, scan_points: int = 32,
                       resonant: bool = False) -> list[_flows.Branch]:
    table = gap_table if gap_table is not None else band_edges(V, max(n, 1), settings=settings)
    gap = _require_open(table, n)
    ts = np.linspace(0.0, 1.0, t_points + 1)
    return _flows.trace_branches(
        lambda t: dirichlet_eigenvalues_at(V, t, n, table, settings, scan_points,
                                           resonant=resonant),
        ts, match_tol=12.0 * (gap[1] - gap[0]) / t_points)


def _circle_dist(a: float, b: float) -> float:
    d = abs(a - b) % 1.0
    return min(d, 1.0 - d)


def _theta_t_roots(V, E, settings, resonant) -> list[float]:
    """Parameters t in [0, 1) where the half-line Dirichlet condition holds at
    a fixed gap energy (theta of the decaying resp. growing space equals 1)."""
    path = build_path(lambda t: _dirichlet_theta(V, t, E, settings, resonant),
                      init_samples=_t_path_samples(V, E))
    from dislotop.winding import crossings
    return sorted(c.t % 1.0 for c in crossings(path, 1.0 + 0.0j))


def branch_join_defect(V: TrigPotential, n: int,
                       gap_table: GapTable | None = None,
                       settings: PropagationSettings = DEFAULT_SETTINGS,
                       probe_rel: float = 1e-4) -> float:
    """How well Dirichlet eigenvalue and resonant branches join at band edges.

    The joined curve touches each band edge in a fold, E - edge ~ c (t - t*)^2,
    so each family's touch parameter is obtained by probing the condition at
    two depths inside the gap and removing the sqrt(depth) fold offset. The
    defect is the worst circle distance between eigenvalue and resonant touch
    parameters over both edges.
    """
    table = gap_table if gap_table is not None else band_edges(V, max(n, 1), settings=settings)
    lo, hi = _require_open(table, n)
    width = hi - lo
    worst = 0.0
    for edge, inward in ((lo, +1.0), (hi, -1.0)):

        def touch_params(resonant: bool) -> list[float]:
            d1 = probe_rel * width
            t1 = _theta_t_roots(V, edge + inward * d1, settings, resonant)
            t2 = _theta_t_roots(V, edge + inward * d1 / 4.0, settings, resonant)
            if len(t1) != len(t2):
                raise RuntimeError(
                    f"near-edge probe unstable at E = {edge!r}: {len(t1)} vs {len(t2)} roots")
            out = []
            for a in t1:
                b = min(t2, key=lambda x: _circle_dist(a, x))
                # t(d) = t* + a sqrt(d): two depths remove the sqrt term
                shift = b - a
                if abs(shift) > 0.5:
                    shift -= math.copysign(1.0, shift)
                out.append((a + 2.0 * shift) % 1.0)
            return sorted(out)

        eig_t = touch_params(resonant=False)
        res_t = touch_params(resonant=True)
        if len(eig_t) != len(res_t):
            return math.inf
        for a in eig_t:
            worst = max(worst, min(_circle_dist(a, b) for b in res_t))
        for b in res_t:
            worst = max(worst, min(_circle_dist(b, a) for a in eig_t))
    return worst

"""Regularity functionals of sheet states and trajectories.

* chord-arc constants ``m <= |z(a) - z(b)| / |a - b| <= M``;
* local mean oscillation (BMO) of ``ln z_alpha`` over windows of length ``<= delta0``;
* vortex-strength bounds ``1/|z_alpha|``;
* analyticity width: exponential decay rate of the Fourier coefficients;
* residual of the distribution-sense (weak) form of the Birkhoff-Rott equation.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from numba import njit
from scipy.optimize import lsq_linear

from .sheet_core import (
    TWO_PI,
    SheetState,
    StrengthBlowupError,
    Topology,
    circulation_grid,
    derivative,
    log_derivative,
    spectral_diff,
)

DEFAULT_DELTA0 = TWO_PI / 16
DEFAULT_FLOOR = 1e-12
DECAY_EXPONENT_RANGE = (-2.0, 8.0)


class ChordArc(NamedTuple):
    m: float
    M: float
    self_intersection: bool


class StrengthBounds(NamedTuple):
    min: float
    max: float
    unbounded: bool


class AnalyticityFit(NamedTuple):
    sigma: float
    fit_quality: float
    decay_exponent: float
    indeterminate: bool
    k_lo: int
    k_hi: int


# --------------------------------------------------------------------------
# chord-arc


def chord_arc_constants(state: SheetState) -> ChordArc:
    """Extreme secant ratios over pairs with ``0 < |alpha_i - alpha_j| <= pi``.

    Closed sheets measure the wrap-around distance in ``alpha``; periodic-flat
    sheets continue ``z`` across the period by its linear part.
    """
    z = state.z
    n = state.N
    shift = state.period if state.topology is Topology.PERIODIC_FLAT else 0.0
    idx = np.arange(n)
    m, M = np.inf, 0.0
    for k in range(1, n // 2 + 1):
        j = idx + k
        wrap = j >= n
        d = np.abs(z[j % n] + shift * wrap - z) / (k * state.h)
        m = min(m, float(d.min()))
        M = max(M, float(d.max()))
    return ChordArc(m, M, m == 0.0)


@njit(cache=True)
def _curve_ratio(xi, s):
    n = xi.shape[0]
    best = 0.0
    bi = 0
    bj = 0
    for i in range(n):
        for j in range(i + 1, n):
            c = abs(xi[j] - xi[i])
            if c == 0.0:
                return np.inf, i, j
            r = (s[j] - s[i]) / c
            if r > best:
                best = r
                bi = i
                bj = j
    return best, bi, bj


def chord_arc_curve(xi, s=None) -> tuple[float, int, int]:
    """Chord-arc constant ``max |s_i - s_j| / |xi_i - xi_j|`` of an open curve.

    ``s`` defaults to the polygonal arclength of the samples.  Returns the
    constant and the extremal pair of indices.
    """
    xi = np.ascontiguousarray(xi, dtype=np.complex128)
    if s is None:
        s = np.concatenate([[0.0], np.cumsum(np.abs(np.diff(xi)))])
    s = np.ascontiguousarray(s, dtype=float)
    best, i, j = _curve_ratio(xi, s)
    return float(best), int(i), int(j)


# --------------------------------------------------------------------------
# local mean oscillation


@njit(cache=True)
def _bmo_real(f, nmax, periodic):
    n = f.shape[0]
    g = np.concatenate((f, f[: nmax - 1])) if periodic else f
    best = 0.0
    for i in range(n):
        acc = 0.0
        for w in range(1, nmax + 1):
            if i + w > g.shape[0]:
                break
            acc += g[i + w - 1]
            if w < 2:
                continue
            mean = acc / w
            dev = 0.0
            for q in range(i, i + w):
                dev += abs(g[q] - mean)
            dev /= w
            if dev > best:
                best = dev
    return best


def bmo_local(f, delta0: float = DEFAULT_DELTA0, spacing: float | None = None,
              periodic: bool = False) -> float:
    """sup over windows ``I`` of at most ``delta0`` of ``(1/|I|) int_I |f - f_I|``.

    Windows are runs of ``w >= 2`` consecutive samples, each sample carrying a
    cell of width ``spacing`` (default ``2*pi/len(f)``), so ``|I| = w*spacing``.
    Complex input is measured componentwise and the larger value returned.
    """
    f = np.asarray(f)
    n = f.shape[0]
    spacing = TWO_PI / n if spacing is None else float(spacing)
    if not delta0 > spacing:
        raise ValueError("delta0 must exceed the grid spacing")
    nmax = min(int(math.floor(delta0 / spacing * (1 + 1e-12))), n)
    if nmax < 2:
        return 0.0
    parts = [f.real, f.imag] if np.iscomplexobj(f) else [f]
    out = 0.0
    for part in parts:
        # remove the bulk offset first; the functional ignores constants
        g = np.ascontiguousarray(part - part[0], dtype=float)
        out = max(out, _bmo_real(g, nmax, bool(periodic)))
    return float(out)


def bmo_log_derivative(state: SheetState, delta0: float = DEFAULT_DELTA0,
                       interval: tuple[float, float] | None = None) -> float:
    """BMO of the unwrapped ``ln z_alpha`` restricted to ``alpha`` in ``interval``."""
    try:
        lz = log_derivative(state)
    except StrengthBlowupError:
        return math.inf
    if interval is not None:
        a, b = interval
        al = state.alpha
        lz = lz[(al > a) & (al < b)]
        if lz.shape[0] < 2:
            raise ValueError("interval contains fewer than 2 samples")
    return bmo_local(lz, delta0, spacing=state.h)


# --------------------------------------------------------------------------
# vortex strength


def strength_bounds(state: SheetState) -> StrengthBounds:
    """Grid extremes of ``gamma = kappa / |z_alpha|``."""
    speed = np.abs(derivative(state))
    smax = float(speed.max())
    if float(speed.min()) <= 1e-14 * max(smax, 1.0):
        lo = state.circulation_scale / smax if smax > 0 else math.inf
        return StrengthBounds(lo, math.inf, True)
    g = state.circulation_scale / speed
    return StrengthBounds(float(g.min()), float(g.max()), False)


# --------------------------------------------------------------------------
# analyticity width


def _mode_amplitudes(state: SheetState) -> tuple[np.ndarray, np.ndarray]:
    n = state.N
    c = np.fft.fft(state.p) / n
    k = np.arange(1, n // 2)
    return k, np.maximum(np.abs(c[k]), np.abs(c[-k]))


def analyticity_width(state: SheetState, floor: float = DEFAULT_FLOOR) -> AnalyticityFit:
    """Fit ``ln|z_k| ~ c0 - p ln k - sigma k`` over the top resolved octave.

    Resolved modes are those above ``floor * max(max|z_k|, lead)`` and no higher than
    ``N/4``; modes nearer the Nyquist limit carry aliased energy whenever the
    spectrum has not decayed.  The fit uses modes ``[K/2, K]`` with ``K`` the
    highest resolved mode, weighted by their height above the floor.
    ``sigma >= 0`` and ``p`` in ``DECAY_EXPONENT_RANGE`` are imposed as bounds;
    fewer than 8 usable modes is indeterminate.
    """
    if state.N < 64:
        raise ValueError("analyticity width needs N >= 64")
    k, amp = _mode_amplitudes(state)
    nan = float("nan")
    if float(amp.max()) == 0.0:
        return AnalyticityFit(nan, nan, nan, True, 0, 0)
    # the floor is relative to the size of the sheet, so rounding noise on a
    # flat sheet is not mistaken for a resolved spectrum
    top = max(float(amp.max()), state.lead)
    above = np.nonzero(amp > floor * top)[0]
    cap = state.N // 4
    above = above[k[above] <= cap]
    if above.size == 0:
        return AnalyticityFit(nan, nan, nan, True, 0, 0)
    k_hi = int(k[above[-1]])
    k_lo = max(1, k_hi // 2)
    sel = (k >= k_lo) & (k <= k_hi) & (amp > floor * top)
    if sel.sum() < 8:
        return AnalyticityFit(nan, nan, nan, True, k_lo, k_hi)
    ks = k[sel].astype(float)
    y = np.log(amp[sel])
    w = np.sqrt(np.maximum(y - math.log(floor * top), 1e-3))
    A = np.column_stack([np.ones_like(ks), -np.log(ks), -ks])
    # over one octave ln k and k are nearly collinear; bounding the algebraic
    # exponent keeps it from absorbing the exponential decay
    lo = [-np.inf, DECAY_EXPONENT_RANGE[0], 0.0]
    hi = [np.inf, DECAY_EXPONENT_RANGE[1], np.inf]
    coef = lsq_linear(A * w[:, None], y * w, bounds=(lo, hi)).x
    resid = y - A @ coef
    quality = float(np.sqrt(np.mean(resid**2)))
    return AnalyticityFit(float(coef[2]), quality, float(coef[1]), False, k_lo, k_hi)


# --------------------------------------------------------------------------
# distribution-sense residual


def default_test_functions(n: int) -> dict[str, np.ndarray]:
    """Four periodic bumps and four low Fourier modes on the ``n``-point grid."""
    a = circulation_grid(n)
    out = {}
    for i, c in enumerate((0.0, 0.5 * np.pi, np.pi, 1.5 * np.pi)):
        out[f"bump{i}"] = np.exp(4.0 * (np.cos(a - c) - 1.0))
    out["cos1"] = np.cos(a)
    out["sin1"] = np.sin(a)
    out["cos2"] = np.cos(2 * a)
    out["sin2"] = np.sin(2 * a)
    return out


def weak_form_rhs(state: SheetState, eta) -> complex:
    """``(kappa/(4 pi i)) iint (eta(a) - eta(b)) K(z(a) - z(b)) da db`` by the trapezoid rule.

    ``K`` is ``1/w`` for closed sheets and its periodization
    ``(pi/P) cot(pi w / P)`` for periodic ones; the diagonal takes the limit
    ``eta_alpha / z_alpha``.
    """
    eta = np.asarray(eta, dtype=np.complex128)
    z = state.z
    w = z[:, None] - z[None, :]
    de = eta[:, None] - eta[None, :]
    np.fill_diagonal(w, 1.0)
    if state.topology is Topology.PERIODIC_FLAT:
        q = np.pi / state.period
        g = de * q / np.tan(q * w)
    else:
        g = de / w
    diag = spectral_diff(eta) / derivative(state)
    np.fill_diagonal(g, diag)
    return complex(state.circulation_scale / (4j * np.pi) * state.h**2 * g.sum())


def weak_form_lhs_integrand(state: SheetState, eta) -> complex:
    """``int conj(z) eta d alpha`` (trapezoid)."""
    return complex(state.h * np.sum(np.conj(state.z) * np.asarray(eta)))


def _three_point(t0, t1, t2, f0, f1, f2):
    """Derivative at ``t1`` of the quadratic through three (possibly uneven) points."""
    h0 = t1 - t0
    h1 = t2 - t1
    return (-h1 / (h0 * (h0 + h1)) * f0 + (h1 - h0) / (h0 * h1) * f1
            + h0 / (h1 * (h0 + h1)) * f2)


def weak_form_residual(snapshots: Sequence[SheetState], eta) -> np.ndarray:
    """Residual ``d/dt int conj(z) eta - RHS`` at every interior snapshot.

    ``snapshots`` is a trajectory (or any time-ordered sequence of states);
    returns a complex array of length ``len(snapshots) - 2``.
    """
    states = list(getattr(snapshots, "snapshots", snapshots))
    if len(states) < 3:
        raise ValueError("weak-form residual needs at least 3 snapshots")
    lhs = [weak_form_lhs_integrand(s, eta) for s in states]
    out = np.empty(len(states) - 2, dtype=np.complex128)
    for k in range(1, len(states) - 1):
        a, b, c = states[k - 1 : k + 2]
        dt = _three_point(a.t, b.t, c.t, lhs[k - 1], lhs[k], lhs[k + 1])
        out[k - 1] = dt - weak_form_rhs(b, eta)
    return out


# --------------------------------------------------------------------------
# reports


@dataclass
class DiagnosticsReport:
    t: float
    m_lower: float
    M_upper: float
    self_intersection: bool
    bmo_value: float
    delta0: float
    strength_min: float
    strength_max: float
    strength_unbounded: bool
    sigma_analyticity: float | None
    decay_exponent: float | None
    fit_quality: float | None
    sigma_indeterminate: bool
    weak_residuals: list[tuple[str, float]] = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        for key, v in d.items():
            if isinstance(v, float) and not math.isfinite(v):
                d[key] = None if math.isnan(v) else ("inf" if v > 0 else "-inf")
        d["weak_residuals"] = [[name, v] for name, v in self.weak_residuals]
        return d


def diagnose_state(state: SheetState, delta0: float = DEFAULT_DELTA0,
                   floor: float = DEFAULT_FLOOR,
                   interval: tuple[float, float] | None = None) -> DiagnosticsReport:
    ca = chord_arc_constants(state)
    sb = strength_bounds(state)
    bmo = math.inf if sb.unbounded else bmo_log_derivative(state, delta0, interval)
    fit = analyticity_width(state, floor) if state.N >= 64 else None
    if fit is None or fit.indeterminate:
        sigma = quality = expo = None
        indet = True
    else:
        sigma, quality, expo, indet = fit.sigma, fit.fit_quality, fit.decay_exponent, False
    return DiagnosticsReport(float(state.t), ca.m, ca.M, ca.self_intersection, bmo, delta0,
                             sb.min, sb.max, sb.unbounded, sigma, expo, quality, indet)


def diagnose_trajectory(snapshots: Sequence[SheetState], delta0: float = DEFAULT_DELTA0,
                        floor: float = DEFAULT_FLOOR,
                        interval: tuple[float, float] | None = None,
                        weak_form: bool = True) -> list[DiagnosticsReport]:
    states = list(getattr(snapshots, "snapshots", snapshots))
    reports = [diagnose_state(s, delta0, floor, interval) for s in states]
    if weak_form and len(states) >= 3:
        for name, eta in default_test_functions(states[0].N).items():
            res = weak_form_residual(states, eta)
            for k, r in enumerate(res, start=1):
                reports[k].weak_residuals.append((name, float(abs(r))))
    return reports


@dataclass(frozen=True)
class Thresholds:
    """Empirical stand-ins for the unquantified constants of the regularity theorem."""

    m_min: float = 0.1
    M_max: float = math.inf
    bmo_max: float = 1.0
    sigma_lost_spacings: float = 2.0  # sigma below this many grid spacings counts as lost


@dataclass(frozen=True)
class CertificationRecord:
    t: float
    chord_arc_ok: bool
    bmo_ok: bool
    certified: bool
    analyticity_lost: bool
    m: float
    M: float
    bmo: float
    sigma: float | None


@dataclass(frozen=True)
class Certification:
    records: list[CertificationRecord]
    uniformly_certified: bool
    inconsistency: bool  # hypotheses hold throughout yet analyticity is lost somewhere


def certify_theorem1_hypotheses(snapshots: Sequence[SheetState],
                                interval: tuple[float, float] | None = None,
                                delta0: float = DEFAULT_DELTA0,
                                thresholds: Thresholds = Thresholds(),
                                floor: float = DEFAULT_FLOOR) -> Certification:
    """Check the uniform chord-arc and BMO hypotheses along a trajectory.

    Pure reporting.  A trajectory that is certified at every time while its
    analyticity width collapses contradicts the regularity theorem and is
    flagged for manual review.
    """
    states = list(getattr(snapshots, "snapshots", snapshots))
    records = []
    for s in states:
        ca = chord_arc_constants(s)
        bmo = bmo_log_derivative(s, delta0, interval)
        fit = analyticity_width(s, floor) if s.N >= 64 else None
        c1 = ca.m >= thresholds.m_min and ca.M <= thresholds.M_max
        c2 = bmo <= thresholds.bmo_max
        if fit is None or fit.indeterminate:
            sigma = None
            lost = False
        else:
            sigma = fit.sigma
            lost = sigma < thresholds.sigma_lost_spacings * s.h
        records.append(CertificationRecord(float(s.t), c1, c2, c1 and c2, lost, ca.m, ca.M, bmo, sigma))
    uniform = all(r.certified for r in records)
    inconsistency = uniform and any(r.analyticity_lost for r in records)
    return Certification(records, uniform, inconsistency)


__all__ = [
    "AnalyticityFit", "Certification", "CertificationRecord", "ChordArc", "DiagnosticsReport",
    "StrengthBounds", "Thresholds", "analyticity_width", "bmo_local", "bmo_log_derivative",
    "certify_theorem1_hypotheses", "chord_arc_constants", "chord_arc_curve",
    "default_test_functions", "diagnose_state", "diagnose_trajectory", "strength_bounds",
    "weak_form_residual", "weak_form_rhs",
]

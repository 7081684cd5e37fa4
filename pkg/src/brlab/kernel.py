"""Birkhoff-Rott velocity evaluation.

All routines return the *conjugate* velocity ``d/dt conj(z)``.  On the sheet the
principal value is discretized on the uniform circulation grid by dropping the
singular self term; for the point-vortex kernel the regular part of the
integrand at the diagonal is added back (``Quadrature.CORRECTED``), which makes
the rule spectrally accurate for analytic sheets.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from enum import Enum
from math import factorial

import numpy as np

from . import _numba
from .sheet_core import (
    TWO_PI,
    SheetState,
    SingularConfigurationError,
    Topology,
    derivative,
    second_derivative,
    spectral_diff,
)


class KernelKind(str, Enum):
    POINT = "point"
    BLOB = "blob"


class Quadrature(str, Enum):
    CORRECTED = "corrected"
    PUNCTURED = "punctured"


@dataclass(frozen=True)
class KernelSpec:
    kind: KernelKind = KernelKind.POINT
    delta: float = 0.0
    quadrature: Quadrature = Quadrature.CORRECTED

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", KernelKind(self.kind))
        object.__setattr__(self, "quadrature", Quadrature(self.quadrature))
        if self.kind is KernelKind.POINT and self.delta != 0:
            raise ValueError("point-vortex kernel requires delta = 0")
        if self.kind is KernelKind.BLOB and not self.delta > 0:
            raise ValueError("blob kernel requires delta > 0")

    @classmethod
    def point(cls, quadrature: Quadrature | str = Quadrature.CORRECTED) -> KernelSpec:
        return cls(KernelKind.POINT, 0.0, Quadrature(quadrature))

    @classmethod
    def blob(cls, delta: float) -> KernelSpec:
        return cls(KernelKind.BLOB, float(delta))

    @property
    def corrected(self) -> bool:
        return self.kind is KernelKind.POINT and self.quadrature is Quadrature.CORRECTED


POINT = KernelSpec.point()


def _raise_coincident(hits: int) -> None:
    if hits:
        raise SingularConfigurationError(
            f"{hits // 2 or hits} coincident sample pair(s) with a point-vortex kernel")


def _scaled(state: SheetState) -> tuple[np.ndarray, float]:
    """Positions rescaled to a 2*pi spatial period, and the velocity factor."""
    f = TWO_PI / state.period
    return state.z * f, f


def diagonal_correction(state: SheetState) -> np.ndarray:
    """Regular part at the diagonal of the on-sheet kernel (``z_aa / z_a^2``).

    For the periodic cot kernel the value is ``z_aa/z_a^2``; the Cauchy kernel
    ``1/(z_i - z_j)`` takes half of it.
    """
    za = derivative(state)
    zaa = second_derivative(state)
    return zaa / za**2


def velocity_periodic(state: SheetState, kernel: KernelSpec = POINT) -> np.ndarray:
    """Conjugate velocity of a periodic perturbed flat sheet.

    ``conj(z_t)_i = (h/(4 pi i)) sum_{j != i} cot((z_i - z_j)/2)`` for a 2*pi
    spatial period; the blob kernel adds ``delta^2`` to ``cosh y - cos x``.
    """
    if state.topology is not Topology.PERIODIC_FLAT:
        raise ValueError("velocity_periodic needs a PERIODIC_FLAT state")
    zeta, f = _scaled(state)
    s, hits = _numba.self_sum_cot(zeta, kernel.delta)
    if kernel.kind is KernelKind.POINT:
        _raise_coincident(hits)
        if kernel.corrected:
            # zeta_aa / zeta_a^2 = (z_aa / z_a^2) / f
            s = s + diagonal_correction(state) / f
    return state.circulation_scale * f * state.h / (4j * np.pi) * s


def velocity_closed(state: SheetState, kernel: KernelSpec = POINT) -> np.ndarray:
    """Conjugate velocity of a closed sheet, ``(h/(2 pi i)) sum_{j != i} 1/(z_i - z_j)``."""
    if state.topology is not Topology.CLOSED:
        raise ValueError("velocity_closed needs a CLOSED state")
    s, hits = _numba.self_sum_cauchy(state.z, None, kernel.delta)
    if kernel.kind is KernelKind.POINT:
        _raise_coincident(hits)
        if kernel.corrected:
            s = s + 0.5 * diagonal_correction(state)
    return state.circulation_scale * state.h / (2j * np.pi) * s


def velocity(state: SheetState, kernel: KernelSpec = POINT) -> np.ndarray:
    if state.topology is Topology.PERIODIC_FLAT:
        return velocity_periodic(state, kernel)
    return velocity_closed(state, kernel)


def velocity_offsheet(state: SheetState, points, kernel: KernelSpec = POINT) -> np.ndarray:
    """Biot-Savart conjugate velocity at points off the sheet.

    For periodic sheets the image sum is taken in closed form through
    ``sum_n 1/(w - 2 pi n) = cot(w/2)/2``.
    """
    w = np.atleast_1d(np.asarray(points, dtype=np.complex128))
    z = state.z
    if state.topology is Topology.PERIODIC_FLAT:
        # distance modulo the period
        f = TWO_PI / state.period
        d = (w[:, None] - z[None, :]) * f
        d = d.real - TWO_PI * np.round(d.real / TWO_PI) + 1j * d.imag
        dmin = np.min(np.abs(d)) / f if d.size else np.inf
    else:
        dmin = np.min(np.abs(w[:, None] - z[None, :])) if w.size else np.inf
    if dmin < 1e-12:
        warnings.warn("query point within 1e-12 of a sheet sample", RuntimeWarning, stacklevel=2)
        if kernel.kind is KernelKind.POINT:
            raise SingularConfigurationError(
                "query point lies on the sheet; use a blob kernel (delta > 0) there")
    out = np.empty_like(w)
    kappa = state.circulation_scale
    if state.topology is Topology.PERIODIC_FLAT:
        f = TWO_PI / state.period
        out = _numba.target_sum_cot(w * f, z * f, kernel.delta)
        return kappa * f * state.h / (4j * np.pi) * out
    _numba.cauchy_target_sum(w, np.ascontiguousarray(z), float(kernel.delta) ** 2, out)
    return kappa * state.h / (2j * np.pi) * out


# --------------------------------------------------------------------------
# Cauchy integral operator on a curve


def curve_differentials(xi: np.ndarray) -> np.ndarray:
    """``xi'(s_j) ds`` for an open curve sampled in order (central differences)."""
    return np.gradient(np.asarray(xi, dtype=np.complex128))


def cauchy_operator(xi, f, dxi=None) -> np.ndarray:
    """``C f(s_i) = sum_{j != i} f_j dxi_j / (xi_i - xi_j)`` (self term omitted)."""
    xi = np.asarray(xi, dtype=np.complex128)
    f = np.asarray(f, dtype=np.complex128)
    dxi = curve_differentials(xi) if dxi is None else np.asarray(dxi, dtype=np.complex128)
    out, hits = _numba.self_sum_cauchy(xi, f * dxi, 0.0)
    _raise_coincident(hits)
    return out


def cauchy_norm_probe(xi, n_trials: int = 100, rng: np.random.Generator | None = None,
                      dxi=None) -> np.ndarray:
    """Ratios ``||C f|| / ||f||`` in discrete ``L^2(ds)`` for random complex inputs."""
    rng = np.random.default_rng(0) if rng is None else rng
    xi = np.asarray(xi, dtype=np.complex128)
    dxi = curve_differentials(xi) if dxi is None else np.asarray(dxi, dtype=np.complex128)
    ds = np.abs(dxi)
    ratios = np.empty(n_trials)
    for m in range(n_trials):
        f = rng.standard_normal(xi.shape[0]) + 1j * rng.standard_normal(xi.shape[0])
        f /= np.sqrt(np.sum(np.abs(f) ** 2 * ds))
        cf = cauchy_operator(xi, f, dxi)
        ratios[m] = np.sqrt(np.sum(np.abs(cf) ** 2 * ds))
    return ratios


# --------------------------------------------------------------------------
# line sheet with flat tails and the two-point difference form


@dataclass(frozen=True)
class LineSheet:
    """Sheet ``z(beta) = beta + p(beta)`` sampled on ``[-L, L]``; flat beyond.

    ``p`` holds ``n + 1`` samples at ``beta_j = -L + j*2L/n`` and must vanish
    (smoothly) at both ends.
    """

    L: float
    p: np.ndarray
    circulation_scale: float = 1.0

    def __post_init__(self) -> None:
        p = np.asarray(self.p, dtype=np.complex128)
        if p.ndim != 1 or p.shape[0] < 9:
            raise ValueError("need at least 9 samples")
        if max(abs(p[0]), abs(p[-1])) > 1e-12:
            raise ValueError("perturbation must vanish at +-L (flat tails)")
        object.__setattr__(self, "p", p)

    @classmethod
    def from_function(cls, L: float, n: int, fn) -> LineSheet:
        beta = np.linspace(-L, L, n + 1)
        return cls(L, np.asarray(fn(beta), dtype=np.complex128))

    @property
    def n(self) -> int:
        return self.p.shape[0] - 1

    @property
    def h(self) -> float:
        return 2.0 * self.L / self.n

    @property
    def beta(self) -> np.ndarray:
        return np.linspace(-self.L, self.L, self.n + 1)

    @property
    def z(self) -> np.ndarray:
        return self.beta + self.p

    def node(self, a: float) -> int:
        j = (a + self.L) / self.h
        i = int(round(j))
        if abs(j - i) > 1e-9 or not 0 < i < self.n:
            raise ValueError(f"alpha={a} is not an interior grid node of the line sheet")
        return i

    def derivatives(self) -> tuple[np.ndarray, np.ndarray]:
        """``z_beta`` and ``z_betabeta`` at the nodes (spectral on the periodic extension)."""
        per = self.p[:-1]
        f = np.pi / self.L
        d1 = spectral_diff(per, 1) * f
        d2 = spectral_diff(per, 2) * f**2
        d1 = np.append(d1, d1[0])
        d2 = np.append(d2, d2[0])
        return 1.0 + d1, d2


_BERNOULLI = (1.0 / 6, -1.0 / 30, 1.0 / 42, -1.0 / 30, 5.0 / 66, -691.0 / 2730)


def _flat_derivative(c: np.ndarray, weights: np.ndarray, beta: float, m: int) -> complex:
    """m-th derivative of sum_k w_k / (c_k - beta)."""
    return complex(np.sum(weights * factorial(m) / (c - beta) ** (m + 1)))


def _line_pv(sheet: LineSheet, B_extra: int, nodes: list[int], weights: list[float],
             split: float | None) -> complex:
    """PV integral over R of sum_k w_k / (z(node_k) - z(beta)) with flat tails.

    Corrected trapezoid on the grid extended by ``B_extra`` flat cells per side,
    Euler-Maclaurin end corrections and closed-form tails.
    """
    h = sheet.h
    z = sheet.z
    zb, zbb = sheet.derivatives()
    if B_extra > 0:
        pad_r = sheet.L + h * np.arange(1, B_extra + 1)
        z = np.concatenate([-pad_r[::-1], z, pad_r])
        zb = np.concatenate([np.ones(B_extra), zb, np.ones(B_extra)])
        zbb = np.concatenate([np.zeros(B_extra), zbb, np.zeros(B_extra)])
        nodes = [i + B_extra for i in nodes]
    B = sheet.L + B_extra * h
    beta = -B + h * np.arange(z.shape[0])
    c = np.array([z[i] for i in nodes])
    w = np.asarray(weights, dtype=float)
    mask = np.ones(z.shape[0], dtype=bool)
    mask[nodes] = False
    vals = np.zeros(z.shape[0], dtype=np.complex128)
    zm = z[mask]
    if split is not None and len(nodes) == 2:
        # outer form (z' - z) / ((z - zb)(z' - zb)) beyond |beta| > split
        inner = np.abs(beta[mask]) <= split
        a, ap = c
        v_in = 1.0 / (a - zm) - 1.0 / (ap - zm)
        v_out = (ap - a) / ((a - zm) * (ap - zm))
        vals[mask] = np.where(inner, v_in, v_out)
        vals[mask] *= w[0]
        if w[1] != -w[0]:
            raise ValueError("two-point form needs opposite weights")
    else:
        for ck, wk in zip(c, w):
            vals[mask] += wk / (ck - zm)
    for k, i in enumerate(nodes):
        reg = zbb[i] / (2.0 * zb[i] ** 2)
        acc = w[k] * reg
        for m, (cm, wm) in enumerate(zip(c, w)):
            if m != k:
                acc += wm / (cm - c[k])
        vals[i] = acc
    trap = h * (np.sum(vals) - 0.5 * (vals[0] + vals[-1]))
    em = 0.0 + 0.0j
    for k, b2k in enumerate(_BERNOULLI, start=1):
        d_hi = _flat_derivative(c, w, B, 2 * k - 1)
        d_lo = _flat_derivative(c, w, -B, 2 * k - 1)
        em -= b2k * h ** (2 * k) / factorial(2 * k) * (d_hi - d_lo)
    # tails: int_B^inf dbeta/(c - beta) pairs into logs with positive real parts
    tails = np.sum(w * (np.log(B - c) - np.log(B + c)))
    return complex(trap + em + tails)


def velocity_line(sheet: LineSheet, alpha: float, pad: int = 0) -> complex:
    """Conjugate velocity of a flat-tailed line sheet at the grid node ``alpha``."""
    i = sheet.node(alpha)
    total = _line_pv(sheet, pad, [i], [1.0], None)
    return sheet.circulation_scale / (2j * np.pi) * total


def velocity_difference(sheet: LineSheet, alpha: float, alpha_prime: float, n_cut: float) -> complex:
    """``conj(z_t)(alpha) - conj(z_t)(alpha')`` from the two-point form.

    The bracketed difference is integrated for ``|beta| <= n_cut`` and the
    factored product form beyond; past the sampled range the flat tail is
    integrated in closed form, whose antiderivative is
    ``log((z(alpha') - beta) / (z(alpha) - beta))``.
    """
    if not n_cut > abs(alpha) + abs(alpha_prime) + 1:
        raise ValueError(f"n_cut={n_cut} must exceed |alpha| + |alpha'| + 1")
    i = sheet.node(alpha)
    ip = sheet.node(alpha_prime)
    if i == ip:
        return 0.0j
    extra = max(0, int(np.ceil((n_cut - sheet.L) / sheet.h - 1e-9)))
    total = _line_pv(sheet, extra, [i, ip], [1.0, -1.0], float(n_cut))
    return sheet.circulation_scale / (2j * np.pi) * total

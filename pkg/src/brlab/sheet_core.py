"""Sheet states, parameterizations and spectral calculus on the circulation grid.

A sheet is sampled at ``N`` uniformly spaced circulation values
``alpha_j = 2*pi*j/N``.  Two topologies are supported:

* ``PERIODIC_FLAT``: a perturbed flat sheet, ``z(alpha) = lead*alpha + p(alpha)``
  with ``p`` periodic and ``lead = period / (2*pi)``;
* ``CLOSED``: a closed curve, ``z`` itself periodic.

Only the periodic part ``p`` is stored, so periodicity holds by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

import numpy as np
from numpy.typing import NDArray
from scipy.interpolate import PchipInterpolator

ComplexArray = NDArray[np.complex128]
FloatArray = NDArray[np.float64]

TWO_PI = 2.0 * np.pi


class Topology(str, Enum):
    PERIODIC_FLAT = "periodic_flat"
    CLOSED = "closed"


class SingularConfigurationError(ValueError):
    """Two sheet samples (or a query point and a sample) coincide."""


class StrengthBlowupError(ValueError):
    """``z_alpha`` vanishes somewhere: the vortex strength ``1/|z_alpha|`` is infinite."""


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SheetState:
    """Sampled sheet position at one instant.

    ``circulation_scale`` is the circulation carried per unit of ``alpha``; it
    is 1 unless a closed sheet was rescaled so that its ``alpha`` period is 2*pi.
    """

    topology: Topology
    p: ComplexArray
    t: float = 0.0
    period: float = TWO_PI
    circulation_scale: float = 1.0

    def __post_init__(self) -> None:
        topo = Topology(self.topology)
        object.__setattr__(self, "topology", topo)
        p = np.asarray(self.p, dtype=np.complex128)
        if p.ndim != 1:
            raise ValueError("sheet samples must be one-dimensional")
        n = p.shape[0]
        if n < 8 or n % 2:
            raise ValueError(f"N must be even and >= 8, got N={n}")
        if not np.isfinite(p).all():
            raise ValueError("sheet samples contain non-finite values")
        if not (np.isfinite(self.period) and self.period > 0):
            raise ValueError("period must be positive")
        if not (np.isfinite(self.circulation_scale) and self.circulation_scale > 0):
            raise ValueError("circulation_scale must be positive")
        object.__setattr__(self, "p", _readonly(p))
        object.__setattr__(self, "t", float(self.t))

    @property
    def N(self) -> int:
        return self.p.shape[0]

    @property
    def h(self) -> float:
        return TWO_PI / self.N

    @property
    def alpha(self) -> FloatArray:
        return circulation_grid(self.N)

    @property
    def lead(self) -> float:
        """Coefficient of the linear part of ``z`` (0 for closed sheets)."""
        if self.topology is Topology.PERIODIC_FLAT:
            return self.period / TWO_PI
        return 0.0

    @property
    def z(self) -> ComplexArray:
        return self.lead * self.alpha + self.p

    def with_z(self, z: ComplexArray, t: float | None = None) -> SheetState:
        return replace(self, p=np.asarray(z) - self.lead * self.alpha,
                       t=self.t if t is None else t)

    def with_p(self, p: ComplexArray, t: float | None = None) -> SheetState:
        return replace(self, p=p, t=self.t if t is None else t)


@dataclass(frozen=True)
class ArclengthSheet:
    """Sheet in arclength form: positions ``xi(s)`` and vortex density ``gamma(s)``.

    ``s`` is a uniform grid covering one period of length ``N*ds``.  For the
    periodic-flat topology ``xi(s + L) = xi(s) + period``.
    """

    s: FloatArray
    xi: ComplexArray
    gamma: FloatArray
    topology: Topology = Topology.PERIODIC_FLAT
    period: float = TWO_PI

    def __post_init__(self) -> None:
        object.__setattr__(self, "topology", Topology(self.topology))
        s = np.asarray(self.s, dtype=float)
        xi = np.asarray(self.xi, dtype=np.complex128)
        gamma = np.asarray(self.gamma, dtype=float)
        if not (s.shape == xi.shape == gamma.shape) or s.ndim != 1:
            raise ValueError("s, xi and gamma must be 1-D arrays of equal length")
        if s.shape[0] < 8:
            raise ValueError("need at least 8 samples")
        ds = np.diff(s)
        if not np.allclose(ds, ds[0], rtol=1e-10, atol=0.0) or ds[0] <= 0:
            raise ValueError("s must be a uniform increasing grid")
        object.__setattr__(self, "s", _readonly(s))
        object.__setattr__(self, "xi", _readonly(xi))
        object.__setattr__(self, "gamma", _readonly(gamma))

    @property
    def length(self) -> float:
        return float(self.s.shape[0] * (self.s[1] - self.s[0]))

    @property
    def lead(self) -> float:
        if self.topology is Topology.PERIODIC_FLAT:
            return self.period / self.length
        return 0.0

    def periodic_part(self) -> ComplexArray:
        return self.xi - self.lead * (self.s - self.s[0])

    def arclength_defect(self) -> float:
        """max | |xi'(s)| - 1 |, with xi' computed spectrally."""
        k = wavenumbers(self.s.shape[0]) * (TWO_PI / self.length)
        dq = np.fft.ifft(1j * k * _kill_nyquist(np.fft.fft(self.periodic_part())))
        return float(np.max(np.abs(np.abs(dq + self.lead) - 1.0)))


@dataclass(frozen=True)
class SpectralDerivative:
    """Fourier coefficients of a periodic sample vector, in ``np.fft`` ordering."""

    coefficients: ComplexArray

    @classmethod
    def of(cls, f: ComplexArray) -> SpectralDerivative:
        return cls(np.fft.fft(np.asarray(f, dtype=np.complex128)))

    @property
    def k(self) -> FloatArray:
        return wavenumbers(self.coefficients.shape[0])

    def inverse(self) -> ComplexArray:
        return np.fft.ifft(self.coefficients)

    def derivative(self, order: int = 1) -> ComplexArray:
        c = self.coefficients
        if order % 2:
            c = _kill_nyquist(c)
        return np.fft.ifft((1j * self.k) ** order * c)

    def evaluate(self, x: FloatArray) -> ComplexArray:
        """Trigonometric interpolant at arbitrary points (period 2*pi)."""
        return trig_interpolate(self.coefficients, x)


# --------------------------------------------------------------------------
# spectral helpers


def circulation_grid(n: int) -> FloatArray:
    return TWO_PI * np.arange(n) / n


def wavenumbers(n: int) -> FloatArray:
    return np.fft.fftfreq(n, d=1.0 / n)


def _kill_nyquist(c: ComplexArray) -> ComplexArray:
    c = np.array(c, copy=True)
    c[c.shape[0] // 2] = 0.0
    return c


def spectral_diff(f: ComplexArray, order: int = 1) -> ComplexArray:
    """Spectral derivative of 2*pi-periodic samples (odd orders drop the Nyquist mode)."""
    return SpectralDerivative.of(f).derivative(order)


def trig_interpolate(coefficients: ComplexArray, x: FloatArray) -> ComplexArray:
    n = coefficients.shape[0]
    k = wavenumbers(n)
    c = np.array(coefficients, copy=True) / n
    x = np.atleast_1d(np.asarray(x, dtype=float))
    nyq = n // 2
    cn = c[nyq]
    c[nyq] = 0.0
    out = np.exp(1j * np.outer(x, k)) @ c
    return out + cn * np.cos(nyq * x)


def spectral_primitive(f: FloatArray | ComplexArray, x: FloatArray) -> tuple[complex, ComplexArray]:
    """Mean of periodic samples ``f`` and the zero-mean part of its primitive at ``x``.

    ``int_0^x f = mean*x + P(x) - P(0)``; returned is ``(mean, P(x) - P(0))``.
    """
    n = len(f)
    c = np.fft.fft(np.asarray(f, dtype=np.complex128))
    mean = c[0] / n
    k = wavenumbers(n)
    ci = np.zeros_like(c)
    nz = k != 0
    ci[nz] = c[nz] / (1j * k[nz])
    ci[n // 2] = 0.0
    x = np.atleast_1d(np.asarray(x, dtype=float))
    prim = trig_interpolate(ci, x) - trig_interpolate(ci, np.zeros(1))[0]
    return mean, prim


# --------------------------------------------------------------------------
# generators


def make_flat_perturbed(n: int, modes: list[tuple[int, complex]] | tuple = (),
                        t: float = 0.0) -> SheetState:
    """Flat sheet plus Fourier modes: ``z = alpha + sum a_k exp(i k alpha)``."""
    if n < 8 or n % 2:
        raise ValueError(f"N must be even and >= 8, got N={n}")
    alpha = circulation_grid(n)
    p = np.zeros(n, dtype=np.complex128)
    for k, a in modes:
        if int(k) != k or abs(k) > n // 2 - 1:
            raise ValueError(f"mode k={k} is not resolvable on N={n}: need |k| <= {n // 2 - 1}")
        p += complex(a) * np.exp(1j * int(k) * alpha)
    return SheetState(Topology.PERIODIC_FLAT, p, t=t)


def make_closed(z: ComplexArray, t: float = 0.0, check_simple: bool = True,
                circulation: float | None = None) -> SheetState:
    """Closed sheet through the samples ``z``.

    ``circulation`` is the total circulation carried by the sheet; the
    ``alpha`` period is normalized to 2*pi and the scale factor stored.
    """
    z = np.asarray(z, dtype=np.complex128)
    if check_simple and not polygon_is_simple(z):
        raise ValueError("closed sheet polygon self-intersects")
    scale = 1.0 if circulation is None else float(circulation) / TWO_PI
    return SheetState(Topology.CLOSED, z, t=t, circulation_scale=scale)


def make_circle(n: int, radius: float = 1.0, center: complex = 0.0, phase: float = 0.0) -> SheetState:
    alpha = circulation_grid(n)
    return make_closed(center + radius * np.exp(1j * (alpha + phase)), check_simple=False)


def make_log_spiral(n: int, theta_min: float, theta_max: float) -> ComplexArray:
    """Samples ``exp(theta) * exp(i*theta)`` of the spiral ``r = e^theta``, uniform in theta."""
    if n < 3:
        raise ValueError("log spiral needs at least 3 samples")
    if not theta_max > theta_min:
        raise ValueError("theta_max must exceed theta_min")
    theta = np.linspace(theta_min, theta_max, n)
    return np.exp((1.0 + 1.0j) * theta)


def log_spiral_arclength(theta: FloatArray, theta_min: float) -> FloatArray:
    """Exact arclength of ``r = e^theta`` measured from ``theta_min``."""
    return np.sqrt(2.0) * (np.exp(theta) - np.exp(theta_min))


def polygon_is_simple(z: ComplexArray) -> bool:
    """O(N^2) test that the closed polygon through ``z`` has no crossings."""
    a = np.asarray(z, dtype=np.complex128)
    b = np.roll(a, -1)
    n = a.shape[0]
    if np.unique(a).shape[0] != n:
        return False

    def cross(u, v):
        return u.real * v.imag - u.imag * v.real

    for i in range(n):
        j = np.arange(i + 2, n)
        if i == 0:
            j = j[j != n - 1]
        if j.size == 0:
            continue
        d1 = cross(b[i] - a[i], a[j] - a[i])
        d2 = cross(b[i] - a[i], b[j] - a[i])
        d3 = cross(b[j] - a[j], a[i] - a[j])
        d4 = cross(b[j] - a[j], b[i] - a[j])
        if np.any((d1 * d2 < 0) & (d3 * d4 < 0)):
            return False
    return True


# --------------------------------------------------------------------------
# derivatives


def derivative(state: SheetState) -> ComplexArray:
    """``z_alpha`` at the samples: spectral derivative of ``p`` plus the linear part."""
    return state.lead + spectral_diff(state.p, 1)


def second_derivative(state: SheetState) -> ComplexArray:
    return spectral_diff(state.p, 2)


def log_derivative(state: SheetState) -> ComplexArray:
    """Continuous branch of ``ln z_alpha`` along the grid.

    The argument is unwrapped so that neighbouring samples differ by less than
    pi; the branch is anchored at the principal value of the first sample.
    """
    za = derivative(state)
    mag = np.abs(za)
    if np.min(mag) <= 1e-14 * max(np.max(mag), 1.0):
        raise StrengthBlowupError("z_alpha vanishes: vortex strength 1/|z_alpha| is unbounded")
    return np.log(mag) + 1j * np.unwrap(np.angle(za))


# --------------------------------------------------------------------------
# change of variables between arclength and circulation


def _invert_monotone(values_fn, slope_fn, grid: FloatArray, samples: FloatArray,
                     targets: FloatArray, tol: float) -> FloatArray:
    """Solve values_fn(x) = target for each target; PCHIP guess, Newton polish."""
    guess = PchipInterpolator(samples, grid)(targets)
    x = guess.copy()
    for _ in range(60):
        dx = (values_fn(x) - targets) / slope_fn(x)
        x = x - dx
        if np.max(np.abs(dx)) < tol:
            break
    return x


def to_circulation(a: ArclengthSheet) -> SheetState:
    """Resample an arclength sheet on a uniform circulation grid.

    ``alpha(s) = int gamma ds``; the total circulation over one period becomes
    the 2*pi period of ``alpha`` (the scale factor is recorded on the state).
    """
    gamma = np.asarray(a.gamma, dtype=float)
    if np.any(gamma <= 0) or not np.isfinite(gamma).all():
        raise ValueError("vortex density must be positive: alpha(s) would not be increasing")
    n = gamma.shape[0]
    length = a.length
    s0 = float(a.s[0])
    stretch = TWO_PI / length  # map s-period onto [0, 2pi)

    def u_of(s):
        return (np.asarray(s) - s0) * stretch

    gmean, _ = spectral_primitive(gamma, np.zeros(1))
    gmean = float(np.real(gmean))
    total = gmean * length
    gcoef = np.fft.fft(gamma.astype(np.complex128))

    def alpha_phys(s):
        u = u_of(s)
        _, prim = spectral_primitive(gamma, u)
        return gmean * (np.asarray(s) - s0) + np.real(prim) / stretch

    def gamma_at(s):
        return np.real(trig_interpolate(gcoef, u_of(s)))

    targets = total * np.arange(n) / n
    s_samples = np.append(a.s, s0 + length)
    a_samples = np.append(alpha_phys(a.s), total)
    s_star = _invert_monotone(alpha_phys, gamma_at, s_samples, a_samples, targets,
                              tol=1e-15 * length)
    q = a.periodic_part()
    xi = a.lead * (s_star - s0) + trig_interpolate(np.fft.fft(q), u_of(s_star))
    scale = total / TWO_PI
    if a.topology is Topology.PERIODIC_FLAT:
        period = a.period
        alpha = circulation_grid(n)
        return SheetState(Topology.PERIODIC_FLAT, xi - period / TWO_PI * alpha,
                          period=period, circulation_scale=scale)
    return SheetState(Topology.CLOSED, xi, circulation_scale=scale)


def from_circulation(state: SheetState) -> ArclengthSheet:
    """Arclength form of a sheet: uniform ``s`` grid, ``gamma = kappa / |z_alpha|``."""
    za = derivative(state)
    speed = np.abs(za)
    if np.min(speed) <= 1e-14 * max(np.max(speed), 1.0):
        raise StrengthBlowupError("z_alpha vanishes: vortex strength 1/|z_alpha| is unbounded")
    n = state.N
    alpha = state.alpha
    smean, _ = spectral_primitive(speed, np.zeros(1))
    smean = float(np.real(smean))
    length = smean * TWO_PI
    scoef = np.fft.fft(speed.astype(np.complex128))

    def s_of(al):
        _, prim = spectral_primitive(speed, al)
        return smean * np.asarray(al) + np.real(prim)

    def speed_at(al):
        return np.real(trig_interpolate(scoef, al))

    s_grid = length * np.arange(n) / n
    a_samples = np.append(alpha, TWO_PI)
    s_samples = np.append(s_of(alpha), length)
    a_star = _invert_monotone(s_of, speed_at, a_samples, s_samples, s_grid, tol=1e-15 * TWO_PI)
    xi = state.lead * a_star + trig_interpolate(np.fft.fft(state.p), a_star)
    gamma = state.circulation_scale / speed_at(a_star)
    return ArclengthSheet(s_grid, xi, gamma, topology=state.topology,
                          period=state.period)


__all__ = [
    "ArclengthSheet", "SheetState", "SingularConfigurationError", "SpectralDerivative",
    "StrengthBlowupError", "Topology", "circulation_grid", "derivative",
    "from_circulation", "log_derivative", "log_spiral_arclength", "make_circle",
    "make_closed", "make_flat_perturbed", "make_log_spiral", "polygon_is_simple",
    "second_derivative", "spectral_diff", "to_circulation", "trig_interpolate", "wavenumbers",
]

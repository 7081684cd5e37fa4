"""Closed-form references: the Caflisch-Orellana profile, the linearized flow, steady states.

The Caflisch-Orellana function

    S(alpha, t) = eps (1 - i) [ (1 - e^{-t/2 - i alpha})^{1+mu} - (1 - e^{-t/2 + i alpha})^{1+mu} ]

solves the Birkhoff-Rott equation linearized about the flat sheet.  Only ``S``
is provided (the nonlinear correction has no closed form), so it serves as a
linear-equation oracle and as a singularity-profile generator.

For ``t >= 0`` both bases have real part ``>= 1 - e^{-t/2} >= 0``, so the
principal branch of the power is continuous.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.special import binom

from .sheet_core import SheetState, Topology, circulation_grid, wavenumbers


class TimeDirection(str, Enum):
    FORWARD = "forward"
    INVERTED = "inverted"


@dataclass(frozen=True)
class COParams:
    epsilon: float
    mu: float
    time_direction: TimeDirection = TimeDirection.FORWARD

    def __post_init__(self) -> None:
        object.__setattr__(self, "time_direction", TimeDirection(self.time_direction))
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if not 0.0 < self.mu <= 1.0:
            raise ValueError("mu must lie in (0, 1]")


def _bases(alpha, t):
    alpha = np.asarray(alpha, dtype=float)
    # 1 - e^{x} via expm1 keeps full relative precision near alpha = t = 0
    b1 = -np.expm1(-0.5 * t - 1j * alpha)
    b2 = -np.expm1(-0.5 * t + 1j * alpha)
    return b1, b2


def _forward_time(p: COParams, t: float) -> tuple[float, bool]:
    """Map the requested time to the forward-time argument of S."""
    if p.time_direction is TimeDirection.FORWARD:
        if t < 0:
            raise ValueError("forward-time S is only defined (principal branch) for t >= 0")
        return float(t), False
    if t > 0:
        raise ValueError("inverted-time profile is defined for t <= 0")
    return -float(t), True


def _S_forward(p: COParams, alpha, t):
    b1, b2 = _bases(alpha, t)
    e = 1.0 + p.mu
    return p.epsilon * (1 - 1j) * (np.power(b1, e) - np.power(b2, e))


def co_solution(p: COParams, alpha, t: float):
    """S(alpha, t).  Inverted mode returns ``conj(S(alpha, -t))`` for ``t <= 0``.

    Conjugation composed with time reversal maps solutions of the (linearized)
    Birkhoff-Rott equation to solutions, so the inverted profile is analytic
    for ``t < 0`` and singular at ``alpha = 0, t = 0``.
    """
    tf, inverted = _forward_time(p, t)
    s = _S_forward(p, alpha, tf)
    return np.conj(s) if inverted else s


def co_alpha_derivative(p: COParams, alpha, t: float):
    tf, inverted = _forward_time(p, t)
    alpha = np.asarray(alpha, dtype=float)
    x = np.exp(-0.5 * tf - 1j * alpha)
    y = np.exp(-0.5 * tf + 1j * alpha)
    b1, b2 = _bases(alpha, tf)
    mu = p.mu
    d = p.epsilon * (1 - 1j) * (1 + mu) * (1j * x * np.power(b1, mu) + 1j * y * np.power(b2, mu))
    return np.conj(d) if inverted else d


def co_time_derivative(p: COParams, alpha, t: float):
    tf, inverted = _forward_time(p, t)
    alpha = np.asarray(alpha, dtype=float)
    x = np.exp(-0.5 * tf - 1j * alpha)
    y = np.exp(-0.5 * tf + 1j * alpha)
    b1, b2 = _bases(alpha, tf)
    mu = p.mu
    d = p.epsilon * (1 - 1j) * (1 + mu) * 0.5 * (x * np.power(b1, mu) - y * np.power(b2, mu))
    return -np.conj(d) if inverted else d


def co_fourier_coefficients(p: COParams, t: float, kmax: int) -> tuple[np.ndarray, np.ndarray]:
    """Exact Fourier coefficients of ``S(., t)`` for modes ``+k`` and ``-k``, k = 1..kmax.

    From the binomial series ``(1 - x)^{1+mu} = sum_n binom(1+mu, n) (-x)^n``.
    """
    tf, inverted = _forward_time(p, t)
    n = np.arange(1, kmax + 1)
    c = binom(1.0 + p.mu, n) * (-1.0) ** n * np.exp(-0.5 * n * tf)
    plus = -p.epsilon * (1 - 1j) * c    # e^{+i n alpha} comes from the second term
    minus = p.epsilon * (1 - 1j) * c
    if inverted:
        plus, minus = np.conj(minus), np.conj(plus)
    return plus, minus


def co_state(p: COParams, n: int, t: float) -> SheetState:
    """Perturbed flat sheet ``z = alpha + S(alpha, t)`` on an ``n``-point grid."""
    alpha = circulation_grid(n)
    return SheetState(Topology.PERIODIC_FLAT, co_solution(p, alpha, t), t=t)


def co_second_derivative_blowup(p: COParams, h: float, t: float = 0.0) -> complex:
    """Second difference ``(S(2h) - 2 S(h) + S(0)) / h^2`` at scale ``h`` next to ``alpha = 0``.

    S is odd in alpha, so the centred difference at 0 vanishes identically; the
    one-sided stencil samples the ``|alpha|^{mu-1}`` growth of ``S''``.
    """
    if not 0.0 < h < 0.1:
        raise ValueError("h must lie in (0, 0.1)")
    s = co_solution(p, np.array([0.0, h, 2.0 * h]), t)
    return complex((s[2] - 2.0 * s[1] + s[0]) / h**2)


def co_first_difference(p: COParams, h: float, t: float = 0.0) -> complex:
    s = co_solution(p, np.array([0.0, h]), t)
    return complex((s[1] - s[0]) / h)


def blowup_exponent(p: COParams, hs=None, t: float = 0.0) -> float:
    """Least-squares slope of ``log |D2(h)|`` against ``log h``."""
    hs = np.geomspace(1e-6, 1e-2, 25) if hs is None else np.asarray(hs, dtype=float)
    d2 = np.array([abs(co_second_derivative_blowup(p, h, t)) for h in hs])
    slope, _ = np.polyfit(np.log(hs), np.log(d2), 1)
    return float(slope)


def co_strength_bounds(p: COParams, t: float, n: int) -> tuple[float, float]:
    """Grid min/max of the vortex strength ``1/|1 + S_alpha|`` of ``z = alpha + S``."""
    alpha = circulation_grid(n)
    sa = co_alpha_derivative(p, alpha, t)
    if np.max(np.abs(sa)) >= 1.0:
        raise ValueError(f"epsilon={p.epsilon} too large: |S_alpha| >= 1, strength unbounded")
    g = 1.0 / np.abs(1.0 + sa)
    return float(g.min()), float(g.max())


# --------------------------------------------------------------------------
# linearization about the flat sheet


def linearized_velocity(w) -> np.ndarray:
    """Linearized conjugate velocity of ``z = alpha + w`` about the flat sheet.

    Mode-wise: ``w_k e^{ik alpha} -> (i |k| / 2) w_k e^{ik alpha}``.  Through
    the conjugation in ``z_t = conj(velocity)`` this couples ``w_k`` with
    ``conj(w_{-k})``.
    """
    w = np.asarray(w, dtype=np.complex128)
    k = wavenumbers(w.shape[0])
    return np.fft.ifft(0.5j * np.abs(k) * np.fft.fft(w))


def linear_mode_matrix(k: int, n: int = 64) -> np.ndarray:
    """Real 4x4 generator of ``(Re a, Im a, Re b, Im b)`` for ``w = a e^{ik alpha} + b e^{-ik alpha}``.

    Built column by column by applying ``linearized_velocity`` and projecting
    ``conj(.)`` back onto the two modes.
    """
    if not 1 <= k <= n // 2 - 1:
        raise ValueError("mode out of range")
    alpha = circulation_grid(n)
    ep = np.exp(1j * k * alpha)
    em = np.exp(-1j * k * alpha)
    basis = [ep, 1j * ep, em, 1j * em]
    m = np.empty((4, 4))
    for col, w in enumerate(basis):
        wt = np.conj(linearized_velocity(w))
        a = np.mean(wt * np.conj(ep))
        b = np.mean(wt * np.conj(em))
        m[:, col] = [a.real, a.imag, b.real, b.imag]
    return m


def growth_rates(k: int, n: int = 64) -> np.ndarray:
    """Sorted real eigenvalues of the mode-``k`` linear generator."""
    ev = np.linalg.eigvals(linear_mode_matrix(k, n))
    return np.sort(ev.real)


def growing_mode(k: int, amplitude: float, n: int) -> SheetState:
    """Flat sheet perturbed along the fastest-growing eigenvector of mode ``k``."""
    m = linear_mode_matrix(k, n)
    ev, vec = np.linalg.eig(m)
    v = np.real(vec[:, np.argmax(ev.real)])
    v = v / np.linalg.norm(v)
    a = v[0] + 1j * v[1]
    b = v[2] + 1j * v[3]
    alpha = circulation_grid(n)
    w = amplitude * (a * np.exp(1j * k * alpha) + b * np.exp(-1j * k * alpha))
    return SheetState(Topology.PERIODIC_FLAT, w)


def linearization_discrepancy(w, amplitude: float = 1e-7, kernel=None) -> float:
    """max |velocity(alpha + a w)/a - linearized_velocity(w)| / max|linearized_velocity(w)|.

    The check every use of ``linearized_velocity`` as an oracle rests on.
    """
    from .kernel import POINT, velocity_periodic

    kernel = POINT if kernel is None else kernel
    w = np.asarray(w, dtype=np.complex128)
    lin = linearized_velocity(w)
    state = SheetState(Topology.PERIODIC_FLAT, amplitude * w)
    full = velocity_periodic(state, kernel) / amplitude
    return float(np.max(np.abs(full - lin)) / np.max(np.abs(lin)))


# --------------------------------------------------------------------------
# exact steady / rigid states


def flat_sheet(n: int) -> SheetState:
    return SheetState(Topology.PERIODIC_FLAT, np.zeros(n, dtype=np.complex128))


def circle_solution(n: int, t: float, radius: float = 1.0) -> SheetState:
    """Uniform circular sheet rotating rigidly at angular velocity ``1/(2 radius^2)``."""
    alpha = circulation_grid(n)
    omega = 0.5 / radius**2
    return SheetState(Topology.CLOSED, radius * np.exp(1j * (alpha + omega * t)), t=t)


def circle_velocity(n: int, t: float = 0.0, radius: float = 1.0) -> np.ndarray:
    """Exact conjugate velocity of the rotating circle, ``-(i/2) / z`` for unit circulation density."""
    z = circle_solution(n, t, radius).z
    return 1.0 / (2j * z)



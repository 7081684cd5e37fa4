"""Time integration of the semi-discrete Birkhoff-Rott system.

The unknown is the periodic part ``p`` of the sheet; the linear part of a
periodic-flat sheet is carried exactly.  ``d/dt z = conj(velocity)``.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Callable

import numpy as np

from .diagnostics import DEFAULT_FLOOR, analyticity_width
from .fast_sum import TreecodeParams, tree_velocity
from .kernel import POINT, KernelKind, KernelSpec, velocity
from .sheet_core import SheetState


class Method(str, Enum):
    RK4 = "rk4"
    RK45 = "rk45"


class Summation(str, Enum):
    DIRECT = "direct"
    TREECODE = "treecode"


class SingularityAbort(RuntimeError):
    """Raised when the solution is no longer resolved; carries the last good state."""

    def __init__(self, reason: str, state: SheetState):
        super().__init__(reason)
        self.reason = reason
        self.state = state


@dataclass(frozen=True)
class IntegratorConfig:
    """Stepping parameters.

    ``filter_level`` is relative to the sheet scale.  With treecode summation
    it must exceed the relative accuracy of the tree, otherwise truncation
    error seeds the high modes and the instability amplifies it.
    """

    method: Method = Method.RK4
    dt: float | None = 1e-2
    tol: float | None = None
    t_end: float = 1.0
    filter_level: float = 1e-12
    snapshot_every: int = 1
    summation: Summation = Summation.DIRECT
    treecode: TreecodeParams = TreecodeParams()
    singularity_check: bool = True
    dt_min: float = 1e-12
    dt_initial: float = 1e-3
    reverse: bool = False  # integrate with the velocity field negated

    def __post_init__(self) -> None:
        object.__setattr__(self, "method", Method(self.method))
        object.__setattr__(self, "summation", Summation(self.summation))
        if self.method is Method.RK4:
            if self.dt is None or not self.dt > 0 or self.tol is not None:
                raise ValueError("rk4 needs dt > 0 and no tol")
        else:
            if self.tol is None or not self.tol > 0 or self.dt is not None:
                raise ValueError("rk45 needs tol > 0 and no dt")
        if not 0.0 <= self.filter_level < 1.0:
            raise ValueError("filter_level must lie in [0, 1)")
        if int(self.snapshot_every) != self.snapshot_every or self.snapshot_every < 1:
            raise ValueError("snapshot_every must be an integer >= 1")
        if not (self.t_end >= 0 and math.isfinite(self.t_end)):
            raise ValueError("t_end must be finite and >= 0")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["method"] = self.method.value
        d["summation"] = self.summation.value
        return d

    def digest(self, kernel: KernelSpec) -> str:
        payload = {"integrator": self.to_dict(),
                   "kernel": {"kind": kernel.kind.value, "delta": kernel.delta,
                              "quadrature": kernel.quadrature.value}}
        return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:16]


@dataclass
class Trajectory:
    snapshots: list[SheetState]
    provenance: dict = field(default_factory=dict)
    abort_reason: str | None = None
    steps: int = 0

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.snapshots])

    @property
    def final(self) -> SheetState:
        return self.snapshots[-1]


# --------------------------------------------------------------------------
# right-hand side and filter


def rhs_function(cfg: IntegratorConfig, kernel: KernelSpec) -> Callable[[SheetState], np.ndarray]:
    sign = -1.0 if cfg.reverse else 1.0
    if cfg.summation is Summation.TREECODE:
        def rhs(state: SheetState) -> np.ndarray:
            return sign * np.conj(tree_velocity(state, kernel, cfg.treecode).velocity)
    else:
        def rhs(state: SheetState) -> np.ndarray:
            return sign * np.conj(velocity(state, kernel))
    return rhs


def krasny_filter(state: SheetState, level: float) -> SheetState:
    """Zero the Fourier modes of ``p`` below ``level`` times the sheet scale.

    The scale is the largest nonzero mode of ``p`` or, for periodic-flat sheets,
    the linear part if that is larger.
    """
    if level <= 0:
        return state
    c = np.fft.fft(state.p)
    mag = np.abs(c)
    mag[0] = 0.0
    top = max(float(mag.max()), state.lead * state.N)
    if top == 0.0:
        return state
    kill = mag < level * top
    kill[0] = False
    if not kill.any():
        return state
    c[kill] = 0.0
    return state.with_p(np.fft.ifft(c))


def _check_resolution(state: SheetState, previous: SheetState, cfg: IntegratorConfig,
                      kernel: KernelSpec) -> None:
    if not cfg.singularity_check or kernel.kind is not KernelKind.POINT or state.N < 64:
        return
    fit = analyticity_width(state, max(cfg.filter_level, DEFAULT_FLOOR))
    if not fit.indeterminate and fit.sigma < 2.0 * state.h:
        raise SingularityAbort(
            f"analyticity width {fit.sigma:.3g} fell below two grid spacings at t={state.t:.6g}",
            previous)


# --------------------------------------------------------------------------
# steppers

_DP_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_DP_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_DP_B5 = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
_DP_B4 = (5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40)


def rk4_step(state: SheetState, dt: float, rhs) -> SheetState:
    p = state.p
    t = state.t
    k1 = rhs(state)
    k2 = rhs(state.with_p(p + 0.5 * dt * k1, t + 0.5 * dt))
    k3 = rhs(state.with_p(p + 0.5 * dt * k2, t + 0.5 * dt))
    k4 = rhs(state.with_p(p + dt * k3, t + dt))
    return state.with_p(p + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4), t + dt)


def dopri_step(state: SheetState, dt: float, rhs, k1=None):
    """One Dormand-Prince 5(4) trial step: (new state, error estimate, last stage)."""
    p = state.p
    ks = [rhs(state) if k1 is None else k1]
    for i in range(1, 7):
        inc = sum(a * k for a, k in zip(_DP_A[i], ks))
        ks.append(rhs(state.with_p(p + dt * inc, state.t + _DP_C[i] * dt)))
    p5 = p + dt * sum(b * k for b, k in zip(_DP_B5, ks))
    p4 = p + dt * sum(b * k for b, k in zip(_DP_B4, ks))
    err = p5 - p4
    return state.with_p(p5, state.t + dt), err, ks[-1]


def adaptive_step(state: SheetState, dt: float, cfg: IntegratorConfig, rhs,
                  dt_cap: float = math.inf) -> tuple[SheetState, float, float]:
    """Advance by one accepted RK45 step: (new state, dt taken, suggested next dt).

    The error is measured on the periodic part relative to ``tol*(1 + max|p|)``.
    """
    dt = min(dt, dt_cap)
    k1 = rhs(state)
    while True:
        if dt < cfg.dt_min:
            raise SingularityAbort(f"adaptive step size underflow (dt={dt:.3g}) at t={state.t:.6g}", state)
        new, err, _ = dopri_step(state, dt, rhs, k1)
        scale = cfg.tol * (1.0 + float(np.max(np.abs(state.p))))
        ratio = float(np.max(np.abs(err))) / scale
        if not math.isfinite(ratio):
            dt *= 0.2
            continue
        factor = 0.9 * ratio ** (-0.2) if ratio > 0 else 5.0
        if ratio <= 1.0:
            return new, dt, dt * min(5.0, max(0.2, factor))
        dt *= max(0.2, factor)


def step(state: SheetState, cfg: IntegratorConfig, kernel: KernelSpec = POINT,
         dt: float | None = None) -> SheetState:
    """One step (accepted step for RK45), followed by the Krasny filter."""
    rhs = rhs_function(cfg, kernel)
    if cfg.method is Method.RK4:
        new = rk4_step(state, cfg.dt if dt is None else dt, rhs)
    else:
        new, _, _ = adaptive_step(state, cfg.dt_initial if dt is None else dt, cfg, rhs)
    if not np.all(np.isfinite(new.p)):
        raise SingularityAbort(f"non-finite positions at t={new.t:.6g}", state)
    return krasny_filter(new, cfg.filter_level)


def run(z0: SheetState, cfg: IntegratorConfig, kernel: KernelSpec = POINT,
        progress: Callable[[SheetState], None] | None = None) -> Trajectory:
    """Integrate from ``z0`` over ``cfg.t_end``; an abort returns the partial trajectory."""
    rhs = rhs_function(cfg, kernel)
    traj = Trajectory([z0], provenance={
        "config_hash": cfg.digest(kernel),
        "kernel": {"kind": kernel.kind.value, "delta": kernel.delta,
                   "quadrature": kernel.quadrature.value},
        "summation": cfg.summation.value,
        "method": cfg.method.value,
    })
    t0 = z0.t
    t_stop = t0 + cfg.t_end
    state = z0
    n = 0
    dt_next = cfg.dt_initial
    eps = 1e-12 * max(1.0, abs(t_stop))
    try:
        while state.t < t_stop - eps:
            remaining = t_stop - state.t
            if cfg.method is Method.RK4:
                new = rk4_step(state, min(cfg.dt, remaining), rhs)
            else:
                new, _, dt_next = adaptive_step(state, dt_next, cfg, rhs, dt_cap=remaining)
            if not np.all(np.isfinite(new.p)):
                raise SingularityAbort(f"non-finite positions at t={new.t:.6g}", state)
            if abs(new.t - t_stop) <= eps:
                new = new.with_p(new.p, t_stop)
            new = krasny_filter(new, cfg.filter_level)
            _check_resolution(new, state, cfg, kernel)
            state = new
            n += 1
            if n % cfg.snapshot_every == 0:
                traj.snapshots.append(state)
            if progress is not None:
                progress(state)
    except SingularityAbort as exc:
        traj.abort_reason = exc.reason
        if exc.state.t > traj.snapshots[-1].t:
            traj.snapshots.append(exc.state)
        traj.steps = n
        return traj
    if traj.snapshots[-1].t < state.t:
        traj.snapshots.append(state)
    traj.steps = n
    return traj


__all__ = ["IntegratorConfig", "Method", "SingularityAbort", "Summation", "Trajectory",
           "adaptive_step", "dopri_step", "krasny_filter", "rk4_step", "run", "step"]

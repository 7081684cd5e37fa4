"""Run configuration: flat ``key = value`` text with dotted section names.

    # comment
    initial.generator = krasny
    initial.n = 256
    kernel.kind = blob
    kernel.delta = 0.1
    integrator.dt = 0.01

Every key is typed; unknown keys and bad values raise ``ConfigError`` naming
the key.  ``RunConfig.to_text`` followed by ``parse_config`` is lossless.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .diagnostics import DEFAULT_DELTA0, DEFAULT_FLOOR, Thresholds
from .evolve import IntegratorConfig
from .fast_sum import TreecodeParams
from .kernel import KernelSpec
from .oracles import COParams, co_state, growing_mode
from .sheet_core import SheetState, Topology, circulation_grid, make_circle, make_flat_perturbed


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"config key '{key}': {message}")
        self.key = key


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _opt_float(s: str) -> float | None:
    return None if s.strip().lower() in ("", "none") else float(s)


def _str_list(s: str) -> list[str]:
    return [p.strip() for p in s.split(",") if p.strip()]


def _int_list(s: str) -> list[int]:
    return [int(p) for p in _str_list(s)]


# key -> (parser, default)
SCHEMA: dict[str, tuple] = {
    "initial.generator": (str, "flat"),
    "initial.n": (int, 256),
    "initial.modes": (str, ""),
    "initial.epsilon": (float, 0.01),
    "initial.k": (int, 1),
    "initial.mu": (float, 0.5),
    "initial.t": (float, 0.0),
    "initial.direction": (str, "forward"),
    "initial.radius": (float, 1.0),
    "kernel.kind": (str, "point"),
    "kernel.delta": (float, 0.0),
    "kernel.quadrature": (str, "corrected"),
    "integrator.method": (str, "rk4"),
    "integrator.dt": (_opt_float, 1e-2),
    "integrator.tol": (_opt_float, None),
    "integrator.t_end": (float, 1.0),
    "integrator.filter_level": (float, 1e-12),
    "integrator.snapshot_every": (int, 10),
    "integrator.singularity_check": (_bool, True),
    "summation.mode": (str, "direct"),
    "treecode.theta": (float, 0.5),
    "treecode.max_leaf": (int, 16),
    "treecode.expansion_order": (int, 8),
    "diagnostics.enabled": (_bool, False),
    "diagnostics.delta0": (float, DEFAULT_DELTA0),
    "diagnostics.floor": (float, DEFAULT_FLOOR),
    "diagnostics.m_min": (float, Thresholds.m_min),
    "diagnostics.bmo_max": (float, Thresholds.bmo_max),
    "output.dir": (str, ""),
    "seed": (int, 0),
    "oracle.name": (str, "co"),
    "oracle.n": (int, 256),
    "oracle.epsilon": (float, 0.01),
    "oracle.mu": (float, 0.5),
    "oracle.t": (float, 0.0),
    "oracle.direction": (str, "inverted"),
    "oracle.kmax": (int, 16),
    "bench.sizes": (_int_list, [256]),
    "bench.modes": (_str_list, ["direct"]),
    "bench.repeats": (int, 3),
    "bench.geometry": (str, "circle"),
}

GENERATORS = ("flat", "modes", "krasny", "growing_mode", "circle", "co")


def _render(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return f"{v:.17g}"
    if isinstance(v, list):
        return ", ".join(str(x) for x in v)
    return str(v)


@dataclass
class RunConfig:
    values: dict = field(default_factory=lambda: {k: d for k, (_, d) in SCHEMA.items()})

    def __getitem__(self, key: str):
        return self.values[key]

    def to_text(self) -> str:
        return "".join(f"{k} = {_render(self.values[k])}\n" for k in sorted(self.values))

    def to_dict(self) -> dict:
        return {k: self.values[k] for k in sorted(self.values)}

    # typed views ------------------------------------------------------

    def kernel(self) -> KernelSpec:
        kind = self["kernel.kind"]
        try:
            if kind == "point":
                if self["kernel.delta"] != 0:
                    raise ConfigError("kernel.delta", "must be 0 for the point kernel")
                return KernelSpec.point(self["kernel.quadrature"])
            if kind == "blob":
                return KernelSpec.blob(self["kernel.delta"])
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError("kernel.delta", str(exc)) from exc
        raise ConfigError("kernel.kind", f"unknown kernel {kind!r} (point, blob)")

    def treecode(self) -> TreecodeParams:
        try:
            return TreecodeParams(self["treecode.theta"], self["treecode.max_leaf"],
                                  self["treecode.expansion_order"])
        except ValueError as exc:
            raise ConfigError("treecode", str(exc)) from exc

    def integrator(self) -> IntegratorConfig:
        method = self["integrator.method"]
        if method not in ("rk4", "rk45"):
            raise ConfigError("integrator.method", f"unknown method {method!r} (rk4, rk45)")
        mode = self["summation.mode"]
        if mode not in ("direct", "treecode"):
            raise ConfigError("summation.mode", f"unknown mode {mode!r} (direct, treecode)")
        dt = self["integrator.dt"] if method == "rk4" else None
        tol = self["integrator.tol"] if method == "rk45" else None
        if method == "rk4" and (dt is None or not dt > 0):
            raise ConfigError("integrator.dt", "rk4 needs dt > 0")
        if method == "rk45" and (tol is None or not tol > 0):
            raise ConfigError("integrator.tol", "rk45 needs tol > 0")
        for key, ok in (("integrator.t_end", self["integrator.t_end"] >= 0),
                        ("integrator.filter_level", 0 <= self["integrator.filter_level"] < 1),
                        ("integrator.snapshot_every", self["integrator.snapshot_every"] >= 1)):
            if not ok:
                raise ConfigError(key, f"invalid value {self[key]!r}")
        return IntegratorConfig(method=method, dt=dt, tol=tol, t_end=self["integrator.t_end"],
                                filter_level=self["integrator.filter_level"],
                                snapshot_every=self["integrator.snapshot_every"],
                                summation=mode, treecode=self.treecode(),
                                singularity_check=self["integrator.singularity_check"])

    def thresholds(self) -> Thresholds:
        return Thresholds(m_min=self["diagnostics.m_min"], bmo_max=self["diagnostics.bmo_max"])

    def initial_state(self) -> SheetState:
        gen = self["initial.generator"]
        n = self["initial.n"]
        if n < 8 or n % 2:
            raise ConfigError("initial.n", f"N must be even and >= 8, got {n}")
        try:
            if gen == "flat":
                return make_flat_perturbed(n)
            if gen == "modes":
                return make_flat_perturbed(n, parse_modes(self["initial.modes"]))
            if gen == "krasny":
                a = circulation_grid(n)
                eps = self["initial.epsilon"]
                return SheetState(Topology.PERIODIC_FLAT, eps * (1 - 1j) * np.sin(a))
            if gen == "growing_mode":
                return growing_mode(self["initial.k"], self["initial.epsilon"], n)
            if gen == "circle":
                return make_circle(n, self["initial.radius"])
            if gen == "co":
                p = COParams(self["initial.epsilon"], self["initial.mu"], self["initial.direction"])
                return co_state(p, n, self["initial.t"])
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError("initial", str(exc)) from exc
        raise ConfigError("initial.generator", f"unknown generator {gen!r} ({', '.join(GENERATORS)})")

    def validate(self) -> None:
        self.initial_state()
        self.kernel()
        self.integrator()


def parse_modes(text: str) -> list[tuple[int, complex]]:
    """``"1:0.01j; -1:0.002+0.001j"`` -> [(1, 0.01j), (-1, 0.002+0.001j)]."""
    out = []
    for item in text.replace(";", " ").split():
        try:
            k, a = item.split(":")
            out.append((int(k), complex(a)))
        except ValueError as exc:
            raise ConfigError("initial.modes", f"cannot parse {item!r} as k:amplitude") from exc
    return out


def parse_config(text: str, base: RunConfig | None = None) -> RunConfig:
    cfg = RunConfig(dict(base.values)) if base is not None else RunConfig()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", f"expected key = value, got {raw.strip()!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        set_value(cfg, key, val)
    return cfg


def set_value(cfg: RunConfig, key: str, val: str) -> None:
    if key not in SCHEMA:
        raise ConfigError(key, "unknown key")
    parser = SCHEMA[key][0]
    try:
        v = parser(val)
    except ValueError as exc:
        raise ConfigError(key, f"bad value {val!r}: {exc}") from exc
    if isinstance(v, float) and math.isnan(v):
        raise ConfigError(key, "NaN is not allowed")
    cfg.values[key] = v


def load_config(path, overrides: list[str] | None = None) -> RunConfig:
    cfg = RunConfig()
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            cfg = parse_config(fh.read())
    for item in overrides or []:
        if "=" not in item:
            raise ConfigError(item, "override must be key=value")
        key, val = item.split("=", 1)
        set_value(cfg, key.strip(), val.strip())
    return cfg


__all__ = ["ConfigError", "GENERATORS", "RunConfig", "SCHEMA", "load_config", "parse_config",
           "parse_modes", "set_value"]

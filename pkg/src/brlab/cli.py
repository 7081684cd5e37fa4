"""``brlab simulate|diagnose|oracle|bench [--config PATH] [--out DIR] [--quiet]``.

Exit codes: 0 success, 2 configuration error, 3 singularity abort (partial
trajectory still written), 4 I/O or schema error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import _numba
from .config import ConfigError, RunConfig, load_config
from .diagnostics import (
    DiagnosticsReport,
    certify_theorem1_hypotheses,
    default_test_functions,
    diagnose_state,
    weak_form_residual,
)
from .evolve import run
from .fast_sum import tree_velocity
from .kernel import POINT, velocity
from .oracles import COParams, co_solution, growth_rates
from .persist import (
    DIAGNOSTICS_SCHEMA,
    SchemaError,
    fmt,
    read_trajectory,
    write_trajectory,
)
from .sheet_core import circulation_grid, make_circle, make_closed

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SINGULAR = 3
EXIT_IO = 4

ORACLES = ("flat", "co", "linear", "circle")


def _log(args, msg: str) -> None:
    if not args.quiet:
        print(msg, file=sys.stderr)


def _out_dir(args, cfg: RunConfig, default: str) -> Path:
    if args.out:
        return Path(args.out)
    if cfg["output.dir"]:
        return Path(cfg["output.dir"])
    return Path(default)


# --------------------------------------------------------------------------
# simulate


def cmd_simulate(args, cfg: RunConfig) -> int:
    z0 = cfg.initial_state()
    kernel = cfg.kernel()
    icfg = cfg.integrator()
    out = _out_dir(args, cfg, "brlab_run")
    _log(args, f"simulate: N={z0.N} {z0.topology.value} kernel={kernel.kind.value} "
               f"t_end={icfg.t_end} -> {out}")
    traj = run(z0, icfg, kernel)
    try:
        write_trajectory(out, traj, cfg.to_dict())
        (out / "config.txt").write_text(cfg.to_text(), encoding="utf-8")
        if cfg["diagnostics.enabled"]:
            _write_diagnostics(out, cfg, traj.snapshots, [""] * len(traj.snapshots))
    except OSError as exc:
        print(f"error: cannot write trajectory: {exc}", file=sys.stderr)
        return EXIT_IO
    if traj.abort_reason:
        print(f"singularity abort: {traj.abort_reason}", file=sys.stderr)
        return EXIT_SINGULAR
    _log(args, f"done: {len(traj.snapshots)} snapshots, {traj.steps} steps")
    return EXIT_OK


# --------------------------------------------------------------------------
# diagnose


def _write_diagnostics(out: Path, cfg: RunConfig, states, errors) -> list[dict]:
    delta0 = cfg["diagnostics.delta0"]
    floor = cfg["diagnostics.floor"]
    entries: list[dict] = []
    reports: list[DiagnosticsReport | None] = []
    for s, err in zip(states, errors):
        if s is None:
            reports.append(None)
            continue
        reports.append(diagnose_state(s, delta0, floor))
    # weak-form residuals over runs of consecutive valid snapshots
    for k in range(1, len(states) - 1):
        trio = states[k - 1 : k + 2]
        if any(s is None for s in trio) or reports[k] is None:
            continue
        for name, eta in default_test_functions(trio[0].N).items():
            reports[k].weak_residuals.append((name, float(abs(weak_form_residual(trio, eta)[0]))))
    valid = [s for s in states if s is not None]
    cert = certify_theorem1_hypotheses(valid, delta0=delta0, thresholds=cfg.thresholds(),
                                       floor=floor) if valid else None
    for rep, err in zip(reports, errors):
        if rep is None:
            entries.append({"gap": True, "error": err})
        else:
            entries.append(rep.to_dict())
    payload = {"schema": DIAGNOSTICS_SCHEMA, "reports": entries}
    if cert is not None:
        payload["certification"] = {
            "uniformly_certified": cert.uniformly_certified,
            "inconsistency": cert.inconsistency,
            "records": [r.__dict__ for r in cert.records],
        }
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "diagnostics.json", "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, default=_json_default)
        fh.write("\n")
    with open(out / "diagnostics.csv", "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# schema={DIAGNOSTICS_SCHEMA}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "m", "M", "bmo", "gamma_min", "gamma_max", "sigma"])
        for rep in reports:
            if rep is None:
                w.writerow(["gap"] * 7)
                continue
            sigma = "indeterminate" if rep.sigma_indeterminate else fmt(rep.sigma_analyticity)
            w.writerow([fmt(rep.t), fmt(rep.m_lower), fmt(rep.M_upper), fmt(rep.bmo_value),
                        fmt(rep.strength_min), fmt(rep.strength_max), sigma])
    return entries


def _json_default(o):
    if isinstance(o, float) and not math.isfinite(o):
        return None if math.isnan(o) else str(o)
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    raise TypeError(type(o))


def cmd_diagnose(args, cfg: RunConfig) -> int:
    if not args.target:
        raise ConfigError("target", "diagnose needs a trajectory directory")
    src = Path(args.target)
    try:
        _, states, errors = read_trajectory(src)
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return EXIT_IO
    out = Path(args.out) if args.out else src
    try:
        _write_diagnostics(out, cfg, states, errors)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    gaps = sum(s is None for s in states)
    _log(args, f"diagnose: {len(states)} snapshots ({gaps} gaps) -> {out}")
    return EXIT_OK


# --------------------------------------------------------------------------
# oracle


def cmd_oracle(args, cfg: RunConfig) -> int:
    name = args.target or cfg["oracle.name"]
    if name not in ORACLES:
        raise ConfigError("oracle.name", f"unknown oracle {name!r}; available: {', '.join(ORACLES)}")
    n = cfg["oracle.n"]
    if n < 8 or n % 2:
        raise ConfigError("oracle.n", f"N must be even and >= 8, got {n}")
    alpha = circulation_grid(n)
    if name == "flat":
        header, rows = ["alpha", "y"], [[a, 0.0] for a in alpha]
    elif name == "co":
        try:
            p = COParams(cfg["oracle.epsilon"], cfg["oracle.mu"], cfg["oracle.direction"])
            s = co_solution(p, alpha, cfg["oracle.t"])
        except ValueError as exc:
            raise ConfigError("oracle", str(exc)) from exc
        header = ["alpha", "s_re", "s_im"]
        rows = [[a, v.real, v.imag] for a, v in zip(alpha, s)]
    elif name == "linear":
        header = ["k", "rate_min", "rate_max"]
        rows = []
        for k in range(1, cfg["oracle.kmax"] + 1):
            g = growth_rates(k, max(64, 2 * k + 4))
            rows.append([k, g[0], g[-1]])
    else:
        st = make_circle(n)
        w = 0.5 * cfg["oracle.t"]
        z = st.z * np.exp(1j * w)
        header = ["alpha", "x", "y"]
        rows = [[a, v.real, v.imag] for a, v in zip(alpha, z)]
    out = Path(args.out) if args.out else Path(".")
    try:
        out.mkdir(parents=True, exist_ok=True)
        path = out / f"oracle_{name}.csv"
        with open(path, "w", newline="", encoding="utf-8") as fh:
            fh.write(f"# schema=brlab-oracle/1 name={name}\n")
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(header)
            for r in rows:
                wr.writerow([str(v) if isinstance(v, int) else fmt(v) for v in r])
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    _log(args, f"oracle {name}: {len(rows)} rows -> {path}")
    return EXIT_OK


# --------------------------------------------------------------------------
# bench


def _bench_state(geometry: str, n: int):
    if geometry == "circle":
        return make_circle(n)
    if geometry == "ellipse":
        a = circulation_grid(n)
        return make_closed(np.cos(a) + 0.5j * np.sin(a), check_simple=False)
    raise ConfigError("bench.geometry", f"unknown geometry {geometry!r} (circle, ellipse)")


def cmd_bench(args, cfg: RunConfig) -> int:
    modes = cfg["bench.modes"]
    for m in modes:
        if m not in ("direct", "treecode"):
            raise ConfigError("bench.modes", f"unknown mode {m!r}")
    sizes = cfg["bench.sizes"]
    if not sizes or any(n < 8 or n % 2 for n in sizes):
        raise ConfigError("bench.sizes", "sizes must be even integers >= 8")
    params = cfg.treecode()
    repeats = max(1, cfg["bench.repeats"])
    rows = []
    for n in sizes:
        st = _bench_state(cfg["bench.geometry"], n)
        ref = None
        for mode in modes:
            if mode == "direct":
                fn = lambda: velocity(st, POINT)  # noqa: E731
            else:
                fn = lambda: tree_velocity(st, POINT, params).velocity  # noqa: E731
            v = fn()  # warm-up (JIT)
            best = math.inf
            for _ in range(repeats):
                t0 = time.perf_counter()
                v = fn()
                best = min(best, time.perf_counter() - t0)
            if mode == "direct":
                ref = v
                dev, bound = 0.0, 0.0
            else:
                if ref is None:
                    ref = velocity(st, POINT)
                dev = float(np.max(np.abs(v - ref)) / np.max(np.abs(ref)))
                bound = tree_velocity(st, POINT, params).error_bound
            rows.append([n, mode, best, dev, bound])
            _log(args, f"bench N={n} {mode}: {best * 1e3:.3f} ms, deviation {dev:.2e}")
    out = _out_dir(args, cfg, ".")
    try:
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "bench.csv", "w", newline="", encoding="utf-8") as fh:
            fh.write("# schema=brlab-bench/1\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["n", "mode", "seconds", "max_rel_deviation", "error_bound"])
            for n, mode, sec, dev, bound in rows:
                w.writerow([n, mode, fmt(sec), fmt(dev), fmt(bound)])
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "diagnose": cmd_diagnose,
            "oracle": cmd_oracle, "bench": cmd_bench}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="brlab", description="Birkhoff-Rott vortex-sheet laboratory")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("target", nargs="?", default=None,
                    help="trajectory directory (diagnose) or oracle name (oracle)")
    ap.add_argument("--config", default=None, help="key = value configuration file")
    ap.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                    help="override one configuration key (repeatable)")
    ap.add_argument("--out", default=None, help="output directory")
    ap.add_argument("--quiet", action="store_true")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    _numba.configure_threads()
    try:
        cfg = load_config(args.config, args.overrides)
        if args.command == "simulate":
            cfg.validate()
        return COMMANDS[args.command](args, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())

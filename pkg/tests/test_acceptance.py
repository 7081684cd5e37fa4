"""Acceptance criteria, each at its stated tolerance.

Every test records a one-line verdict that is printed in the pytest terminal
summary ("criterion N: PASS/FAIL ...").  Run alone with
``python3 -m pytest tests/test_acceptance.py -v``.
"""

import time

import numpy as np
import pytest
from conftest import ACCEPTANCE

from brlab.diagnostics import (
    bmo_local,
    chord_arc_constants,
    chord_arc_curve,
    default_test_functions,
    strength_bounds,
    weak_form_residual,
)
from brlab.evolve import IntegratorConfig, run
from brlab.fast_sum import TreecodeParams, treecode_velocity
from brlab.kernel import LineSheet, cauchy_norm_probe, velocity, velocity_difference, velocity_line
from brlab.oracles import (
    COParams,
    blowup_exponent,
    circle_solution,
    co_state,
    co_strength_bounds,
    co_time_derivative,
    growing_mode,
    growth_rates,
    linearized_velocity,
)
from brlab.sheet_core import make_circle, make_flat_perturbed, make_log_spiral


def record(num, ok, detail):
    ACCEPTANCE[num] = (bool(ok), detail)
    assert ok, f"criterion {num}: {detail}"


def test_criterion_1_steady_states():
    t0 = time.perf_counter()
    flat = float(np.max(np.abs(velocity(make_flat_perturbed(256)))))
    period = 4 * np.pi  # angular velocity 1/2
    traj = run(make_circle(256), IntegratorConfig(dt=1e-3, t_end=period, snapshot_every=1000))
    worst = max(np.max(np.abs(s.z - circle_solution(256, s.t).z)) for s in traj.snapshots)
    elapsed = time.perf_counter() - t0
    ok = flat < 1e-12 and worst < 1e-6 and elapsed < 60 and traj.abort_reason is None
    record(1, ok, f"flat |v|={flat:.1e} (<1e-12); circle rel. error over one turn "
                  f"{worst:.1e} (<1e-6); {elapsed:.0f} s (<60 s)")


def test_criterion_2_linear_growth():
    parts = []
    ok = True
    for k in (1, 2, 3):
        oracle = growth_rates(k)[-1]  # eigenvalue of the linearized operator
        traj = run(growing_mode(k, 1e-6, 64), IntegratorConfig(dt=0.01, t_end=0.5, filter_level=0.0))
        amp = [np.linalg.norm(s.p) for s in traj.snapshots]
        rate = np.polyfit(traj.times, np.log(amp), 1)[0]
        err = abs(rate - oracle) / oracle
        ok &= err < 0.02 and abs(oracle - k / 2) < 1e-12
        parts.append(f"k={k}: {rate:.4f} vs {oracle:.4f} ({err:.1e})")
    record(2, ok, "fitted rate within 2% of |k|/2; " + ", ".join(parts))


def test_criterion_3_co_linearized_residual():
    p = COParams(0.01, 0.5)
    errs = []
    for t in (0.1, 1.0, 3.0):
        s = co_state(p, 512, t)
        lhs = np.conj(linearized_velocity(s.p))
        rhs = co_time_derivative(p, s.alpha, t)
        errs.append(float(np.max(np.abs(lhs - rhs)) / np.max(np.abs(rhs))))
    ok = max(errs) < 1e-6
    record(3, ok, "rel. error at t=0.1,1,3: " + ", ".join(f"{e:.1e}" for e in errs) + " (<1e-6)")


def test_criterion_4_singularity_profile():
    parts = []
    ok = True
    for mu in (0.3, 0.5, 0.7):
        e = blowup_exponent(COParams(0.01, mu, "inverted"))
        ok &= abs(e - (mu - 1)) < 0.05
        parts.append(f"mu={mu}: {e:.3f}")
    p = COParams(0.01, 0.5, "inverted")
    lo, hi = 1.0, 1.0
    for t in np.linspace(-3.0, 0.0, 13):
        a, b = co_strength_bounds(p, t, 4096)
        sb = strength_bounds(co_state(p, 4096, t))
        lo, hi = min(lo, a, sb.min), max(hi, b, sb.max)
    ok &= 0.8 <= lo and hi <= 1.2
    record(4, ok, "blowup exponents " + ", ".join(parts)
           + f" (mu-1 +-0.05); strength in [{lo:.3f}, {hi:.3f}] (within [0.8, 1.2])")


def test_criterion_5_diagnostics_sanity():
    rng = np.random.default_rng(5)
    const = bmo_local(np.full(256, 2.5))
    f = rng.standard_normal(256)
    shift = max(abs(bmo_local(f + c) - bmo_local(f)) for c in (-7.0, 0.3, 3.0, 10.0))
    ca = chord_arc_constants(make_flat_perturbed(256))
    c1, _, _ = chord_arc_curve(make_log_spiral(1000, 0.0, 6 * np.pi))
    c2, _, _ = chord_arc_curve(make_log_spiral(10000, 0.0, 6 * np.pi))
    drift = abs(c1 / c2 - 1)
    ok = (const == 0.0 and shift < 1e-14 and abs(ca.m - 1) < 1e-12 and abs(ca.M - 1) < 1e-12
          and drift < 0.01)
    record(5, ok, f"BMO(const)={const}; BMO shift change {shift:.1e} (<1e-14); flat (m,M)="
                  f"({ca.m:.15f}, {ca.M:.15f}); spiral chord-arc {c1:.4f} -> {c2:.4f} "
                  f"({drift:.1e} < 1%)")


def test_criterion_6_difference_form():
    sheet = LineSheet.from_function(6.0, 480, lambda b: 0.1 * (1 + 0.5j) * np.exp(-2.0 * b**2))
    diff_err, cut_err = 0.0, 0.0
    for a, ap in ((0.5, -1.0), (0.0, 2.0), (-2.5, 1.25)):
        direct = velocity_line(sheet, a) - velocity_line(sheet, ap)
        d1 = velocity_difference(sheet, a, ap, 5.0)
        d2 = velocity_difference(sheet, a, ap, 10.0)
        diff_err = max(diff_err, abs(d1 - direct))
        cut_err = max(cut_err, abs(d1 - d2))
    ok = diff_err < 1e-8 and cut_err < 1e-12
    record(6, ok, f"|difference form - direct| = {diff_err:.1e} (<1e-8); "
                  f"N_cut doubling change {cut_err:.1e} (<1e-12)")


def test_criterion_7_weak_form():
    levels = ((0.1, 32), (0.05, 64), (0.025, 128), (0.0125, 256))
    res: dict[str, list[float]] = {}
    steady = 0.0
    for dt, n in levels:
        cfg = IntegratorConfig(dt=dt, t_end=0.4, filter_level=0.0, singularity_check=False)
        traj = run(make_flat_perturbed(n, [(1, 0.05j), (-1, 0.02)]), cfg)
        # the filter keeps rounding noise from seeding the instability on the flat sheet
        flat = run(make_flat_perturbed(n), IntegratorConfig(dt=dt, t_end=0.4))
        k = int(round(0.2 / dt))
        for name, eta in default_test_functions(n).items():
            res.setdefault(name, []).append(abs(weak_form_residual(traj.snapshots[k - 1 : k + 2], eta)[0]))
            steady = max(steady, float(np.max(np.abs(weak_form_residual(flat, eta)))))
    dts = np.array([dt for dt, _ in levels])
    orders = {name: np.polyfit(np.log(dts), np.log(r), 1)[0] for name, r in res.items()}
    worst = min(orders.values())
    # order estimates scatter by ~5e-4 around the nominal 2 of the central difference
    ok = worst >= 2.0 - 0.01 and steady < 1e-12
    record(7, ok, f"min fitted order {worst:.4f} over 8 test functions (>= 2, slack 0.01); "
                  f"steady-state residual {steady:.1e} (<1e-12)")


def _best_time(fn, repeats=3):
    fn()
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def test_criterion_8_treecode():
    params = TreecodeParams(theta=0.5, max_leaf=16, expansion_order=8)
    state = make_circle(4096)
    res = treecode_velocity(state, params=params)
    ref = velocity(state)
    dev = float(np.max(np.abs(res.velocity - ref)) / np.max(np.abs(ref)))
    sizes = [2**e for e in range(10, 16)]
    states = [make_circle(n) for n in sizes]
    times = [_best_time(lambda s=s: treecode_velocity(s, params=params)) for s in states]
    slope = float(np.polyfit(np.log(sizes), np.log(times), 1)[0])
    ok = dev < 1e-8 and slope < 1.3
    record(8, ok, f"max rel. deviation at N=4096 {dev:.1e} (<1e-8, reported bound "
                  f"{res.error_bound:.1e}); scaling exponent {slope:.2f} (<1.3) over "
                  f"N=2^10..2^15 ({times[0] * 1e3:.1f} to {times[-1] * 1e3:.0f} ms)")


def test_criterion_9_cauchy_probe():
    maxima = []
    for n in (256, 512, 1024):
        xi = make_log_spiral(n, 0.0, 4 * np.pi)
        ratios = cauchy_norm_probe(xi, 100, np.random.default_rng(9))
        maxima.append(float(ratios.max()))
    spread = max(maxima) / min(maxima)
    ok = spread <= 2.0 and all(np.isfinite(maxima))
    record(9, ok, "max ||Cf||/||f|| over 100 inputs at N=256,512,1024: "
                  + ", ".join(f"{m:.3f}" for m in maxima) + f" (spread {spread:.2f} <= 2)")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from brlab.evolve import IntegratorConfig, SingularityAbort, krasny_filter, run, step
from brlab.fast_sum import TreecodeParams
from brlab.kernel import KernelSpec
from brlab.oracles import circle_solution, growing_mode
from brlab.sheet_core import (
    SheetState,
    Topology,
    circulation_grid,
    derivative,
    make_circle,
    make_closed,
    make_flat_perturbed,
)


def krasny_state(n, eps=0.01 * 2 * np.pi):
    a = circulation_grid(n)
    return SheetState(Topology.PERIODIC_FLAT, eps * (1 - 1j) * np.sin(a))


def test_config_validation():
    bad = [dict(dt=0.0), dict(dt=None), dict(method="rk45", dt=None), dict(method="rk45", tol=1e-8),
           dict(filter_level=1.0), dict(snapshot_every=0), dict(t_end=-1.0),
           dict(t_end=float("inf")), dict(method="euler")]
    for kw in bad:
        with pytest.raises(ValueError):
            IntegratorConfig(**kw)


def test_config_digest_is_stable_and_sensitive():
    a = IntegratorConfig(dt=0.01)
    k = KernelSpec.point()
    assert a.digest(k) == IntegratorConfig(dt=0.01).digest(k)
    assert a.digest(k) != IntegratorConfig(dt=0.02).digest(k)
    assert a.digest(k) != a.digest(KernelSpec.blob(0.1))


def test_flat_sheet_stays_flat():
    traj = run(make_flat_perturbed(64), IntegratorConfig(dt=0.1, t_end=1.0))
    assert traj.abort_reason is None
    assert np.max(np.abs(traj.final.p)) < 1e-14
    assert traj.final.t == pytest.approx(1.0)


def test_zero_duration_run():
    z0 = make_flat_perturbed(32, [(1, 0.01)])
    traj = run(z0, IntegratorConfig(dt=0.1, t_end=0.0))
    assert len(traj.snapshots) == 1 and traj.steps == 0
    assert traj.final is z0


def test_snapshot_cadence_keeps_final_state():
    traj = run(make_circle(32), IntegratorConfig(dt=0.1, t_end=1.05, snapshot_every=4))
    assert traj.steps == 11
    np.testing.assert_allclose(traj.times, [0.0, 0.4, 0.8, 1.05], atol=1e-12)


def test_circle_rotates_rigidly():
    traj = run(make_circle(64), IntegratorConfig(dt=0.01, t_end=2.0))
    exact = circle_solution(64, 2.0)
    assert np.max(np.abs(traj.final.z - exact.z)) < 1e-9


def test_rk45_circle():
    traj = run(make_circle(64), IntegratorConfig(method="rk45", dt=None, tol=1e-10, t_end=2.0))
    assert traj.final.t == pytest.approx(2.0)
    assert np.max(np.abs(traj.final.z - circle_solution(64, 2.0).z)) < 1e-8


def test_rk4_is_fourth_order():
    z0 = make_flat_perturbed(64, [(1, 0.05j), (-2, 0.02)])
    finals = [run(z0, IntegratorConfig(dt=dt, t_end=0.8, filter_level=0.0)).final.p
              for dt in (0.05, 0.025, 0.0125)]
    ratio = np.max(np.abs(finals[0] - finals[1])) / np.max(np.abs(finals[1] - finals[2]))
    assert 14.0 < ratio < 18.0


@pytest.mark.parametrize("k", [1, 2, 3])
def test_linear_growth_rate(k):
    z0 = growing_mode(k, 1e-6, 64)
    traj = run(z0, IntegratorConfig(dt=0.01, t_end=0.5, filter_level=0.0))
    amp = [np.linalg.norm(s.p) for s in traj.snapshots]
    rate = np.polyfit(traj.times, np.log(amp), 1)[0]
    assert rate == pytest.approx(k / 2, rel=0.02)


def test_time_reversal_returns_to_start():
    z0 = make_flat_perturbed(64, [(1, 0.05j), (2, 0.01)])
    fwd = run(z0, IntegratorConfig(dt=0.01, t_end=0.5, filter_level=0.0))
    back = run(fwd.final.with_p(fwd.final.p, 0.0),
               IntegratorConfig(dt=0.01, t_end=0.5, filter_level=0.0, reverse=True))
    assert np.max(np.abs(back.final.p - z0.p)) < 1e-10


@settings(max_examples=25, deadline=None)
@given(st.lists(st.complex_numbers(max_magnitude=1.0, allow_nan=False), min_size=32, max_size=32),
       st.floats(1e-8, 0.5))
def test_filter_is_idempotent(values, level):
    s = SheetState(Topology.CLOSED, np.array(values))
    once = krasny_filter(s, level)
    twice = krasny_filter(once, level)
    np.testing.assert_allclose(twice.p, once.p, atol=1e-15)


def test_filter_keeps_mean_and_large_modes():
    a = circulation_grid(64)
    p = 3.0 + np.exp(1j * a) + 1e-14 * np.exp(5j * a)
    out = krasny_filter(SheetState(Topology.CLOSED, p), 1e-12)
    np.testing.assert_allclose(out.p, 3.0 + np.exp(1j * a), atol=1e-15)
    assert krasny_filter(SheetState(Topology.CLOSED, p), 0.0).p is not None


def test_closed_sheet_centroid_conserved():
    a = circulation_grid(128)
    z0 = make_closed(np.exp(1j * a) * (1 + 0.2 * np.cos(3 * a)) + 0.5)
    traj = run(z0, IntegratorConfig(dt=0.01, t_end=1.0))
    assert abs(np.mean(traj.final.z) - np.mean(z0.z)) < 1e-12


def test_treecode_summation_tracks_direct():
    z0 = make_flat_perturbed(512, [(1, 0.05j)])
    # truncation error of the tree seeds high modes; the filter must sit above it
    tc = IntegratorConfig(dt=0.05, t_end=0.5, filter_level=1e-9, summation="treecode",
                          treecode=TreecodeParams(0.3, 16, 12))
    direct = run(z0, IntegratorConfig(dt=0.05, t_end=0.5, filter_level=1e-9))
    tree = run(z0, tc)
    assert tree.abort_reason is None and direct.abort_reason is None
    assert np.max(np.abs(tree.final.p - direct.final.p)) < 1e-8


def test_single_step_api():
    s = step(make_circle(32), IntegratorConfig(dt=0.1))
    assert s.t == pytest.approx(0.1)
    s = step(make_circle(32), IntegratorConfig(method="rk45", dt=None, tol=1e-9))
    assert s.t > 0


def test_point_kernel_run_aborts_at_curvature_singularity():
    seen = []
    traj = run(krasny_state(256), IntegratorConfig(dt=0.01, t_end=3.0, snapshot_every=10),
               progress=seen.append)
    assert traj.abort_reason is not None and "analyticity" in traj.abort_reason
    assert 1.8 < traj.final.t < 2.6
    assert len(traj.snapshots) > 10
    assert np.all(np.diff(traj.times) > 0)
    # the run stops at the last resolved state, one step before the failed one
    assert traj.final.t == pytest.approx(seen[-1].t)


def test_rk45_step_underflow_aborts():
    cfg = IntegratorConfig(method="rk45", dt=None, tol=1e-30, dt_min=1e-3, t_end=1.0,
                           singularity_check=False)
    traj = run(make_flat_perturbed(64, [(1, 0.1)]), cfg)
    assert traj.abort_reason is not None and "underflow" in traj.abort_reason
    with pytest.raises(SingularityAbort):
        step(make_flat_perturbed(64, [(1, 0.1)]), cfg)


def _tangent_winding(state):
    angle = np.unwrap(np.angle(derivative(state)))
    return float(angle.max() - angle.min())


@pytest.mark.slow
def test_blob_sheet_rolls_up_into_spiral():
    cfg = IntegratorConfig(dt=0.01, t_end=6.0, snapshot_every=100)
    traj = run(krasny_state(256), cfg, KernelSpec.blob(0.1))
    assert traj.abort_reason is None
    assert _tangent_winding(traj.final) > 2 * np.pi
    assert _tangent_winding(traj.snapshots[0]) < 0.2

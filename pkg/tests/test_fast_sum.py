import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from brlab.fast_sum import TreecodeParams, tree_velocity, treecode_velocity, treecode_velocity_periodic
from brlab.kernel import POINT, KernelSpec, Quadrature, velocity
from brlab.sheet_core import circulation_grid, make_circle, make_closed, make_flat_perturbed


def _ellipse(n):
    a = circulation_grid(n)
    return make_closed(np.cos(a) + 0.5j * np.sin(a), check_simple=False)


def _kh(n):
    return make_flat_perturbed(n, [(1, 0.1j), (2, 0.03), (-1, 0.02)])


def _deviation(state, kernel, params):
    res = tree_velocity(state, kernel, params)
    ref = velocity(state, kernel)
    return res, np.max(np.abs(res.velocity - ref))


def test_params_validation():
    for bad in ({"theta": 1.0}, {"theta": -0.1}, {"max_leaf": 0}, {"expansion_order": -1},
                {"max_leaf": 2.5}):
        with pytest.raises(ValueError):
            TreecodeParams(**bad)
    assert TreecodeParams(0.5, 16, 8).nominal_error == pytest.approx(0.5**9 / 0.5)


@pytest.mark.parametrize("state", [_ellipse(1024), _kh(1024)], ids=["closed", "periodic"])
def test_theta_zero_reproduces_direct_sum(state):
    res, dev = _deviation(state, POINT, TreecodeParams(theta=0.0))
    assert dev / np.max(np.abs(res.velocity)) < 1e-13
    assert res.expansions == 0


def test_topology_guards():
    with pytest.raises(ValueError):
        treecode_velocity(_kh(64))
    with pytest.raises(ValueError):
        treecode_velocity_periodic(make_circle(64))


@pytest.mark.parametrize("state", [_ellipse(2048), _kh(2048), make_flat_perturbed(2048)],
                         ids=["ellipse", "kh", "flat"])
@pytest.mark.parametrize("theta,order", [(0.5, 4), (0.5, 8), (0.3, 6)])
def test_deviation_within_reported_bound(state, theta, order):
    res, dev = _deviation(state, POINT, TreecodeParams(theta, 16, order))
    assert dev <= res.abs_error_bound
    assert res.expansions > 0


@pytest.mark.parametrize("make", [_ellipse, _kh])
def test_error_decreases_with_order(make):
    state = make(2048)
    devs = [_deviation(state, POINT, TreecodeParams(0.5, 16, p))[1] for p in (2, 6, 10, 14)]
    assert all(a > b for a, b in zip(devs, devs[1:]))


def test_deterministic():
    state = _kh(1024)
    a = tree_velocity(state).velocity
    b = tree_velocity(state).velocity
    assert np.array_equal(a, b)


@pytest.mark.parametrize("state", [_ellipse(2048), _kh(2048)], ids=["closed", "periodic"])
def test_blob_kernel_within_bound(state):
    kernel = KernelSpec.blob(0.05)
    res, dev = _deviation(state, kernel, TreecodeParams(0.5, 16, 8))
    assert dev <= res.abs_error_bound
    assert res.expansions > 0


def test_punctured_quadrature_supported():
    state = _ellipse(1024)
    kernel = KernelSpec.point(Quadrature.PUNCTURED)
    res, dev = _deviation(state, kernel, TreecodeParams(0.4, 16, 10))
    assert dev <= res.abs_error_bound


@settings(max_examples=10, deadline=None)
@given(st.integers(1, 64), st.integers(0, 12))
def test_bound_holds_for_any_leaf_size_and_order(max_leaf, order):
    state = _ellipse(512)
    res, dev = _deviation(state, POINT, TreecodeParams(0.5, max_leaf, order))
    assert dev <= res.abs_error_bound

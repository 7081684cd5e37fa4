import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from brlab.kernel import velocity
from brlab.oracles import (
    COParams,
    blowup_exponent,
    circle_solution,
    circle_velocity,
    co_alpha_derivative,
    co_first_difference,
    co_fourier_coefficients,
    co_solution,
    co_state,
    co_strength_bounds,
    co_time_derivative,
    flat_sheet,
    growing_mode,
    growth_rates,
    linearization_discrepancy,
    linearized_velocity,
)
from brlab.sheet_core import circulation_grid, derivative

P = COParams(0.01, 0.5)


def _mp_S(eps, mu, alpha, t):
    mp.mp.dps = 40
    a, t = mp.mpf(alpha), mp.mpf(t)
    e = 1 + mp.mpf(mu)
    b1 = 1 - mp.exp(-t / 2 - 1j * a)
    b2 = 1 - mp.exp(-t / 2 + 1j * a)
    return complex(eps * (1 - 1j) * (mp.power(b1, e) - mp.power(b2, e)))


@pytest.mark.parametrize("mu", [0.3, 0.5, 1.0])
@pytest.mark.parametrize("t", [0.0, 0.7, 3.0])
def test_co_solution_matches_mpmath(mu, t):
    p = COParams(0.01, mu)
    for alpha in (np.pi / 2, 0.3, -2.0):
        ref = _mp_S(0.01, mu, alpha, t)
        assert abs(co_solution(p, alpha, t) - ref) <= 1e-14 * max(abs(ref), 1e-3)


def test_co_solution_zero_at_origin_and_decays():
    assert co_solution(P, 0.0, 0.0) == 0
    alpha = circulation_grid(64)
    assert np.max(np.abs(co_solution(P, alpha, 60.0))) < 1e-14


@settings(max_examples=50, deadline=None)
@given(st.floats(-np.pi, np.pi), st.floats(0.0, 5.0), st.floats(0.05, 1.0))
def test_co_symmetries(alpha, t, mu):
    p = COParams(0.02, mu)
    s = co_solution(p, alpha, t)
    assert abs(co_solution(p, -alpha, t) + s) < 1e-15
    assert abs(s - 1j * np.conj(s)) < 1e-15


def test_inverted_profile_is_conjugate_time_reversal():
    pi = COParams(0.01, 0.5, "inverted")
    alpha = circulation_grid(32)
    np.testing.assert_array_equal(co_solution(pi, alpha, -0.8), np.conj(co_solution(P, alpha, 0.8)))
    with pytest.raises(ValueError):
        co_solution(pi, alpha, 0.1)
    with pytest.raises(ValueError):
        co_solution(P, alpha, -0.1)


def test_params_validation():
    for eps, mu in ((0.0, 0.5), (0.01, 0.0), (0.01, 1.5)):
        with pytest.raises(ValueError):
            COParams(eps, mu)


@pytest.mark.parametrize("direction,t", [("forward", 0.5), ("inverted", -0.5)])
def test_analytic_derivatives_match_finite_differences(direction, t):
    p = COParams(0.01, 0.5, direction)
    alpha = np.linspace(-3, 3, 13)
    h = 1e-5
    fa = (co_solution(p, alpha + h, t) - co_solution(p, alpha - h, t)) / (2 * h)
    ft = (co_solution(p, alpha, t + h) - co_solution(p, alpha, t - h)) / (2 * h)
    np.testing.assert_allclose(co_alpha_derivative(p, alpha, t), fa, atol=1e-10)
    np.testing.assert_allclose(co_time_derivative(p, alpha, t), ft, atol=1e-10)


def test_fourier_coefficients_match_fft():
    t = 0.4
    s = co_state(P, 256, t)
    c = np.fft.fft(s.p) / 256
    plus, minus = co_fourier_coefficients(P, t, 20)
    np.testing.assert_allclose(c[1:21], plus, atol=1e-15)
    np.testing.assert_allclose(c[-1:-21:-1], minus, atol=1e-15)


@pytest.mark.parametrize("mu", [0.3, 0.5, 0.7])
def test_blowup_exponent_inverted_profile(mu):
    p = COParams(0.01, mu, "inverted")
    assert abs(blowup_exponent(p) - (mu - 1)) < 0.05


def test_second_difference_bounded_without_singularity():
    assert blowup_exponent(COParams(0.01, 1.0, "inverted")) > -0.05
    # at t < 0 the inverted profile is analytic: second differences stay bounded
    assert blowup_exponent(COParams(0.01, 0.5, "inverted"), t=-0.5) > -0.05


def test_first_difference_bounded_at_singularity():
    p = COParams(0.01, 0.5, "inverted")
    vals = [abs(co_first_difference(p, h)) for h in np.geomspace(1e-8, 1e-2, 10)]
    assert max(vals) < 2 * 0.01 * 1.5 * np.sqrt(2)


@pytest.mark.parametrize("t", [0.1, 1.0, 3.0])
def test_linearized_operator_reproduces_time_derivative(t):
    # z = alpha + S: z_t = conj(conjugate velocity)
    n = 512
    s = co_state(P, n, t)
    lhs = np.conj(linearized_velocity(s.p))
    rhs = co_time_derivative(P, s.alpha, t)
    assert np.max(np.abs(lhs - rhs)) / np.max(np.abs(rhs)) < 1e-6


@pytest.mark.parametrize("k", [1, 2, 3, 7])
def test_growth_rates_are_plus_minus_half_k(k):
    g = growth_rates(k)
    np.testing.assert_allclose(g[[0, -1]], [-k / 2, k / 2], atol=1e-12)


def test_growing_mode_is_eigenvector():
    s = growing_mode(2, 1e-3, 64)
    zt = np.conj(linearized_velocity(s.p))
    np.testing.assert_allclose(zt, 1.0 * s.p, atol=1e-15)


@settings(max_examples=25, deadline=None)
@given(st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False),
       st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False))
def test_linearized_velocity_is_linear(a, b):
    rng = np.random.default_rng(0)
    u = rng.standard_normal(32) + 1j * rng.standard_normal(32)
    w = rng.standard_normal(32) + 1j * rng.standard_normal(32)
    lhs = linearized_velocity(a * u + b * w)
    rhs = a * linearized_velocity(u) + b * linearized_velocity(w)
    assert np.max(np.abs(lhs - rhs)) < 1e-12 * (1 + abs(a) + abs(b))


def test_nonlinear_velocity_differs_at_second_order():
    w = co_state(COParams(1.0, 1.0), 128, 1.0).p
    d1 = linearization_discrepancy(w, 1e-3)
    d2 = linearization_discrepancy(w, 5e-4)
    assert 1.9 < d1 / d2 < 2.1


def test_strength_bounds_over_time():
    for t in np.linspace(0.0, 5.0, 11):
        lo, hi = co_strength_bounds(P, t, 4096)
        assert 0.9 <= lo <= hi <= 1.1
    with pytest.raises(ValueError):
        co_strength_bounds(COParams(2.0, 0.5), 0.0, 64)


def test_strength_bounds_match_state():
    s = co_state(P, 256, 0.5)
    g = 1.0 / np.abs(derivative(s))
    lo, hi = co_strength_bounds(P, 0.5, 256)
    assert abs(g.min() - lo) < 1e-12 and abs(g.max() - hi) < 1e-12


def test_strength_is_continuous_in_time():
    ts = np.linspace(0.0, 1.0, 101)
    his = np.array([co_strength_bounds(P, t, 1024)[1] for t in ts])
    assert np.max(np.abs(np.diff(his))) < 1e-3


def test_steady_states():
    assert np.max(np.abs(velocity(flat_sheet(128)))) < 1e-13
    c = circle_solution(64, 1.0, 2.0)
    np.testing.assert_allclose(np.abs(c.z), 2.0)
    np.testing.assert_allclose(velocity(c), circle_velocity(64, 1.0, 2.0), atol=1e-13)

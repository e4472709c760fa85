import math

import numpy as np
import pytest
from scipy.linalg import solve_continuous_lyapunov

from bathspec import bath, qbm
from bathspec.errors import DomainError, NumericalError
from bathspec.units import natural_oscillator

from conftest import C215


# ---------------------------------------------------------------------------
# finite-time coefficients


def test_coefficients_at_zero_and_negative(ohmic40, osc_theta50):
    c0 = qbm.coefficients_at(ohmic40, osc_theta50, 0.0)
    assert (c0.damping, c0.freq_shift, c0.momentum_diffusion, c0.cross_diffusion) == (
        0.0, 0.0, 0.0, 0.0,
    )
    with pytest.raises(DomainError):
        qbm.coefficients_at(ohmic40, osc_theta50, -0.1)


def test_coefficient_quadruple_frozen_values(ohmic40, osc_theta50):
    # frozen against the quadrature pipeline cross-checked with the analytic
    # Si/Cin antiderivatives for the pure-linear branch
    c = qbm.coefficients_at(ohmic40, osc_theta50, 5.0)
    assert math.isclose(c.damping, 0.0041528947512577399, rel_tol=1e-9)
    assert math.isclose(c.freq_shift, -0.23701356478782004, rel_tol=1e-9)
    assert math.isclose(c.momentum_diffusion, 0.46488518129282952, rel_tol=1e-9)
    assert math.isclose(c.cross_diffusion, 0.0077239185165721737, rel_tol=1e-9)


def test_asymptotic_damping_closed_form(ohmic40, osc_theta50):
    asy = qbm.asymptotic_coefficients(ohmic40, osc_theta50)
    # (pi/2) * I(1) with I nondimensionalised so I(1) = coupling
    assert math.isclose(asy.damping, 0.5 * math.pi * C215, rel_tol=1e-12)
    assert math.isclose(asy.damping, 1.0 / 215.0, rel_tol=1e-12)
    assert math.isclose(asy.freq_shift, -0.23673369379927564, rel_tol=1e-9)
    # fluctuation-dissipation tie at the resonance
    theta = asy.theta
    expect_dpp = asy.damping / math.tanh(1.0 / (2.0 * theta))
    assert math.isclose(asy.momentum_diffusion, expect_dpp, rel_tol=1e-12)


def test_finite_time_converges_to_asymptote(ohmic40, osc_theta50):
    asy = qbm.asymptotic_coefficients(ohmic40, osc_theta50)
    gaps = []
    for t in (30.0, 100.0, 300.0):
        c = qbm.coefficients_at(ohmic40, osc_theta50, t)
        gaps.append(abs(c.damping / asy.damping - 1.0))
    assert gaps[2] < gaps[0]
    assert gaps[2] < 2e-3


def test_asymptotics_reject_window_outside_support(osc_theta50):
    narrow = bath.LocalPowerLaw(scale=1.0, exponent=1.0, omega_lo=0.99, omega_hi=1.01)
    with pytest.raises(DomainError):
        qbm.asymptotic_coefficients(narrow, osc_theta50, half_window=0.03)


# ---------------------------------------------------------------------------
# resonant window closed form


def test_resonant_window_limit_frozen():
    lim = qbm.resonant_window_limit(1.0, 1.0, -2.3, 0.03, 1.0)
    assert math.isclose(lim.slope_term, 0.19805943209663474, rel_tol=1e-12)
    assert math.isclose(lim.offset_term, 0.030015759422454255, rel_tol=1e-12)
    assert math.isclose(lim.total, lim.slope_term + lim.offset_term, rel_tol=1e-14)


def test_resonant_window_limit_slope_scales_with_exponent():
    a = qbm.resonant_window_limit(1.0, 1.0, -2.0, 0.03, 1.0)
    b = qbm.resonant_window_limit(1.0, 1.0, 0.0, 0.03, 1.0)
    # slope term proportional to (1 - exponent)
    assert math.isclose(a.slope_term / b.slope_term, 3.0, rel_tol=1e-12)
    assert math.isclose(a.offset_term, b.offset_term, rel_tol=1e-12)


def test_dxp_closed_form_matches_quadrature(window_natural, osc_hot):
    lim = qbm.resonant_window_limit(C215, 1.0, -2.3, 0.005, 6.84e6)
    asy = qbm.asymptotic_coefficients(window_natural, osc_hot, half_window=0.005)
    assert abs(asy.cross_diffusion_resonant / lim.total - 1.0) < 1e-4


# ---------------------------------------------------------------------------
# non-Markovianity measure


def test_measure_from_ratio_closed_form():
    rng = np.random.default_rng(7)
    for r in rng.uniform(0.0, 10.0, 50):
        s = math.sqrt(1.0 + r)
        assert math.isclose(
            qbm.measure_from_ratio(r), r / (s + 1.0) ** 2, rel_tol=1e-14
        )
    assert qbm.measure_from_ratio(0.0) == 0.0
    with pytest.raises(DomainError):
        qbm.measure_from_ratio(-0.5)


def test_dual_route_measure_identity():
    # eigenvalue route vs closed form on random coefficient triples
    rng = np.random.default_rng(20260816)
    worst = 0.0
    for _ in range(1000):
        gamma = rng.uniform(1e-6, 10.0)
        dpp = rng.uniform(1e-6, 10.0)
        dxp = rng.uniform(-10.0, 10.0)
        co = qbm.MasterEquationCoefficients(
            time=math.inf, damping=gamma, freq_shift=0.0,
            momentum_diffusion=dpp, cross_diffusion=dxp,
        )
        rep = qbm.nonmarkovianity_measure(co)
        closed = qbm.measure_from_ratio((dxp**2 + gamma**2) / dpp**2)
        worst = max(worst, abs(rep.value - closed))
    assert worst < 1e-12


def test_measure_needs_positive_momentum_diffusion():
    co = qbm.MasterEquationCoefficients(math.inf, 0.1, 0.0, 0.0, 0.0)
    with pytest.raises(DomainError):
        qbm.nonmarkovianity_measure(co)


def test_bound_from_exponent_frozen():
    b = qbm.bound_from_exponent(-2.3, 1.0, 0.03)
    assert math.isclose(b.ratio_bound, 0.015898322586510853, rel_tol=1e-12)
    assert math.isclose(b.measure_bound, 0.0039432965494194836, rel_tol=1e-12)
    assert math.isclose(
        b.measure_bound, qbm.measure_from_ratio(b.ratio_bound), rel_tol=1e-14
    )
    # Ohmic exponent gives a vanishing bound; distance from 1 raises it
    assert qbm.bound_from_exponent(1.0, 1.0, 0.03).measure_bound == 0.0
    assert (
        qbm.bound_from_exponent(-3.0, 1.0, 0.03).measure_bound
        > qbm.bound_from_exponent(-1.0, 1.0, 0.03).measure_bound
    )
    with pytest.raises(DomainError):
        qbm.bound_from_exponent(1.0, 1.0, 1.5)


def test_xi_ordering_ohmic_vs_window(osc_hot, window_natural):
    ohmic = bath.OhmicCutoff(coupling=C215, cutoff=1e7)
    rep_o = qbm.nonmarkovianity_measure(
        qbm.asymptotic_coefficients(ohmic, osc_hot).as_coefficients()
    )
    rep_w = qbm.nonmarkovianity_measure(
        qbm.asymptotic_coefficients(window_natural, osc_hot).as_coefficients()
    )
    assert math.isclose(rep_o.value, 2.0011542780237597e-15, rel_tol=1e-6)
    assert math.isclose(rep_w.value, 0.00099413020999734327, rel_tol=1e-6)
    assert rep_w.value > 1e8 * rep_o.value


# ---------------------------------------------------------------------------
# generator structure


def test_drift_and_diffusion_structure():
    co = qbm.MasterEquationCoefficients(math.inf, 0.01, -0.2, 3.0, 0.4)
    h = qbm.drift_matrix(co)
    d = qbm.diffusion_matrix(co)
    np.testing.assert_allclose(h, [[0.0, -1.0], [0.8, 0.02]], rtol=1e-14)
    np.testing.assert_allclose(d, [[0.0, -0.4], [-0.4, 6.0]], rtol=1e-14)
    res = qbm.generator_consistency(co)
    assert res < 1e-12


# ---------------------------------------------------------------------------
# covariance propagation


def test_propagation_input_validation(ohmic40, osc_theta50):
    good = np.diag([100.0, 100.0])
    with pytest.raises(DomainError):
        qbm.propagate_covariance(ohmic40, osc_theta50, good, np.array([1.0, 0.5]))
    with pytest.raises(DomainError):
        qbm.propagate_covariance(ohmic40, osc_theta50, good, np.array([-1.0, 1.0]))
    with pytest.raises(DomainError):
        qbm.propagate_covariance(
            ohmic40, osc_theta50, np.diag([1e-6, 1e-6]), np.array([0.0, 1.0])
        )
    with pytest.raises(DomainError):
        qbm.propagate_covariance(
            ohmic40, osc_theta50, good, np.array([0.0, 1.0]), coefficient_source="bogus"
        )


def test_covariance_reaches_lyapunov_fixed_point(osc_theta50):
    model = bath.OhmicCutoff(coupling=C215, cutoff=50.0)
    asy = qbm.asymptotic_coefficients(model, osc_theta50)
    h = qbm.drift_matrix(asy.as_coefficients())
    d = qbm.diffusion_matrix(asy.as_coefficients())
    sigma = solve_continuous_lyapunov(h, d)
    t_end = 20.0 / asy.damping
    traj = qbm.propagate_covariance(
        model, osc_theta50, np.diag([100.0, 100.0]), np.array([0.0, t_end]),
        coefficient_source="asymptotic",
    )
    final = traj.matrices[-1]
    gap = np.max(np.abs(final - sigma)) / np.max(np.abs(sigma))
    assert gap < 1e-6
    # equipartition at theta = 50: <p^2> -> theta, <x^2> -> theta/omega_eff^2
    om2 = 1.0 + asy.freq_shift
    assert abs(final[1, 1] / 50.0 - 1.0) < 0.02
    assert abs(final[0, 0] * om2 / 50.0 - 1.0) < 0.02


def test_table_source_matches_asymptotic_late(osc_theta50):
    model = bath.OhmicCutoff(coupling=C215, cutoff=50.0)
    times = np.array([0.0, 2000.0, 4300.0])
    g0 = np.diag([100.0, 100.0])
    a = qbm.propagate_covariance(
        model, osc_theta50, g0, times, coefficient_source="asymptotic"
    )
    b = qbm.propagate_covariance(
        model, osc_theta50, g0, times, coefficient_source="table", table_points=33
    )
    rel = np.max(np.abs(a.matrices[-1] - b.matrices[-1])) / np.max(np.abs(a.matrices[-1]))
    assert rel < 1e-3
    assert b.table_times.size == 33
    assert b.table_coefficients.shape == (33, 4)


def test_inverted_potential_raises_numerical_error(osc_hot):
    # the huge-cutoff frequency renormalization flips the effective potential
    model = bath.OhmicCutoff(coupling=C215, cutoff=1e7)
    with pytest.raises(NumericalError):
        qbm.propagate_covariance(
            model, osc_hot, np.diag([1e7, 1e7]), np.array([0.0, 500.0]),
            coefficient_source="asymptotic",
        )

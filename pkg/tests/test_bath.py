import math

import numpy as np
import pytest

from bathspec import bath
from bathspec.errors import DomainError, SingularityError, UnphysicalParameterError
from bathspec.units import OscillatorParams, natural_oscillator

from conftest import C215


# ---------------------------------------------------------------------------
# model constructors and evaluation


def test_ohmic_density_closed_form():
    m = bath.OhmicCutoff(coupling=0.3, cutoff=5.0)
    w = np.array([0.5, 1.0, 4.9999])
    np.testing.assert_allclose(bath.eval_density(m, w), 0.3 * w, rtol=1e-14)
    assert bath.eval_density(m, 5.1) == 0.0
    assert bath.eval_density(m, np.array([7.0]))[0] == 0.0


def test_ohmic_rejects_bad_params():
    with pytest.raises(UnphysicalParameterError):
        bath.OhmicCutoff(coupling=-1.0, cutoff=5.0)
    with pytest.raises(UnphysicalParameterError):
        bath.OhmicCutoff(coupling=1.0, cutoff=0.0)


def test_local_power_law_support():
    m = bath.LocalPowerLaw(scale=2.0, exponent=-1.5, omega_lo=0.5, omega_hi=2.0)
    assert bath.eval_density(m, 1.0) == 2.0
    assert bath.eval_density(m, 0.4) == 0.0
    assert bath.eval_density(m, 2.1) == 0.0
    # negative exponent with support touching zero diverges
    with pytest.raises(UnphysicalParameterError):
        bath.LocalPowerLaw(scale=1.0, exponent=-0.5, omega_lo=0.0, omega_hi=1.0)


def test_window_model_continuity_and_seams():
    k = -2.3
    d = 0.03
    m = bath.PiecewisePowerWindow(
        density_at_ref=1.7, omega_ref=1.0, exponent=k, half_window=d, cutoff=10.0
    )
    # continuous at the reference frequency
    assert math.isclose(bath.eval_density(m, 1.0), 1.7, rel_tol=1e-13)
    # the seams carry finite jumps with analytic size (x vs x^k branch scales)
    lo = 1.0 - d
    below = bath.eval_density(m, lo * (1 - 1e-9))
    above = bath.eval_density(m, lo * (1 + 1e-9))
    assert math.isclose(below / above, lo / lo**k, rel_tol=1e-6)
    assert bath.eval_density(m, 10.0 * 1.001) == 0.0


def test_tabulated_density_interpolates():
    m = bath.TabulatedDensity(omegas=[1.0, 2.0, 4.0], densities=[1.0, 3.0, 5.0])
    assert math.isclose(bath.eval_density(m, 1.5), 2.0, rel_tol=1e-14)
    assert math.isclose(bath.eval_density(m, 3.0), 4.0, rel_tol=1e-14)


def test_model_dict_round_trip():
    m = bath.PiecewisePowerWindow(
        density_at_ref=1.0, omega_ref=2.0, exponent=0.5, half_window=0.1, cutoff=9.0
    )
    d = bath.model_to_dict(m)
    m2 = bath.model_from_dict(d)
    assert m2 == m
    with pytest.raises(DomainError):
        bath.model_from_dict({"variant": "no_such_model"})
    with pytest.raises(DomainError):
        bath.model_from_dict({"variant": "ohmic_cutoff", "coupling": 1.0})
    with pytest.raises(DomainError):
        bath.model_from_dict(
            {"variant": "ohmic_cutoff", "coupling": 1.0, "cutoff": 2.0, "extra": 3}
        )


def test_rescaled_model_evaluates_consistently():
    m = bath.OhmicCutoff(coupling=0.3, cutoff=5.0)
    r = bath.rescaled_model(m, 2.0, 10.0)
    w = np.array([0.5, 1.0, 2.4])
    np.testing.assert_allclose(
        bath.eval_density(r, w), bath.eval_density(m, 2.0 * w) / 10.0, rtol=1e-13
    )


# ---------------------------------------------------------------------------
# kernels: closed-form oracles for the hard-cutoff Ohmic model
#
# nu(s) = c sin(L s)/s, so the one-sided transform has the exact values
#   re nu_hat(w) = c pi/2           for 0 < w < L
#   im nu_hat(w) = -(c/2) ln((L+w)/|L-w|)


def test_nu_kernel_zero_is_cutoff_area():
    m = bath.OhmicCutoff(coupling=C215, cutoff=40.0)
    assert math.isclose(bath.nu_kernel(m, 0.0), C215 * 40.0, rel_tol=1e-12)


def test_nu_kernel_time_domain_closed_form():
    c, lam = 0.25, 8.0
    m = bath.OhmicCutoff(coupling=c, cutoff=lam)
    s = np.array([0.3, 1.0, 2.7, 6.0])
    np.testing.assert_allclose(
        bath.nu_kernel(m, s), c * np.sin(lam * s) / s, rtol=1e-9
    )


def test_nu_hat_matches_analytic_transform():
    c, lam = 0.25, 8.0
    m = bath.OhmicCutoff(coupling=c, cutoff=lam)
    for w in (0.5, 1.0, 3.0, 7.5):
        nh = bath.nu_hat(m, w)
        assert math.isclose(nh.real, c * math.pi / 2.0, rel_tol=1e-12)
        expect_im = -(c / 2.0) * math.log((lam + w) / abs(lam - w))
        assert math.isclose(nh.imag, expect_im, rel_tol=1e-7)


def test_nu_hat_real_part_is_density_identity():
    models = [
        bath.OhmicCutoff(coupling=0.3, cutoff=20.0),
        bath.LocalPowerLaw(scale=1.2, exponent=-1.3, omega_lo=0.2, omega_hi=6.0),
        bath.PiecewisePowerWindow(
            density_at_ref=0.8, omega_ref=1.0, exponent=2.0, half_window=0.1, cutoff=12.0
        ),
        bath.TabulatedDensity(
            omegas=np.linspace(0.1, 9.0, 40), densities=np.linspace(1.0, 2.0, 40)
        ),
    ]
    for m in models:
        for w in (0.47, 1.31, 3.9):
            expect = math.pi * bath.eval_density(m, w) / (2.0 * w)
            assert math.isclose(bath.nu_hat(m, w).real, expect, rel_tol=1e-12)


def test_eta_kernel_is_derivative_of_nu():
    m = bath.OhmicCutoff(coupling=0.25, cutoff=8.0)
    h = 1e-5
    for s in (0.4, 1.1, 3.0):
        fd = (bath.nu_kernel(m, s + h) - bath.nu_kernel(m, s - h)) / (2.0 * h)
        assert math.isclose(bath.eta_kernel(m, s), fd, rel_tol=1e-6)


def test_eta_hat_identity():
    m = bath.OhmicCutoff(coupling=0.25, cutoff=8.0)
    w = 1.7
    nu0 = bath.nu_kernel(m, 0.0)
    expect = 1j * w * bath.nu_hat(m, w) - nu0
    got = bath.eta_hat(m, w)
    assert abs(got - expect) <= 1e-12 * abs(expect)


def test_nu_hat_rejects_seam_frequency():
    m = bath.LocalPowerLaw(scale=1.0, exponent=1.0, omega_lo=0.5, omega_hi=2.0)
    with pytest.raises(SingularityError):
        bath.nu_hat(m, 2.0)


def test_kernels_reject_negative_argument():
    m = bath.OhmicCutoff(coupling=0.25, cutoff=8.0)
    with pytest.raises(DomainError):
        bath.nu_kernel(m, -1.0)
    with pytest.raises(DomainError):
        bath.nu_hat(m, 0.0)


# ---------------------------------------------------------------------------
# renormalised resonance and weak-coupling gate


def test_k_squared_closed_form():
    m = bath.OhmicCutoff(coupling=C215, cutoff=40.0)
    osc = natural_oscillator(215.0, 50.0)
    expect = 1.0 - 2.0 * C215 * 40.0
    assert math.isclose(bath.k_squared(m, osc), expect, rel_tol=1e-12)


def test_weak_coupling_report_passes_at_moderate_cutoff():
    osc = natural_oscillator(215.0, 50.0)
    rep = bath.weak_coupling_report(bath.OhmicCutoff(coupling=C215, cutoff=50.0), osc)
    assert rep.passed
    assert rep.k_squared > 0.0
    assert rep.derivative_ratio < 0.01 and rep.magnitude_ratio < 0.01


def test_weak_coupling_report_rejects_cutoff_dominated_shift():
    osc = natural_oscillator(215.0, 50.0)
    with pytest.raises(UnphysicalParameterError):
        bath.weak_coupling_report(bath.OhmicCutoff(coupling=C215, cutoff=1e7), osc)


def test_greens_fourier_peaks_near_renormalised_frequency():
    m = bath.OhmicCutoff(coupling=C215, cutoff=50.0)
    osc = natural_oscillator(215.0, 50.0)
    kf = math.sqrt(bath.k_squared(m, osc))
    w = np.linspace(0.8 * kf, 1.2 * kf, 201)
    mag = np.abs(np.array([bath.greens_fourier(m, osc, wi) for wi in w]))
    peak = w[int(np.argmax(mag))]
    assert abs(peak - kf) < 0.01 * kf


# ---------------------------------------------------------------------------
# thermal force spectrum


def test_thermal_force_psd_classical_limit():
    m = bath.OhmicCutoff(coupling=3e-17, cutoff=1e8)
    w = np.array([2e5, 1e6])
    q = bath.thermal_force_psd(m, 300.0, w, mode="quantum")
    c = bath.classical_force_floor(m, 300.0, w)
    np.testing.assert_allclose(q, c, rtol=1e-6)
    z = bath.thermal_force_psd(m, 0.0, w, mode="quantum")
    np.testing.assert_array_equal(z, np.zeros_like(w))

import math

import numpy as np
import pytest

from bathspec import bath, optomech
from bathspec.errors import DomainError
from bathspec.units import HBAR, dimensionless_temperature


@pytest.fixture
def cavity_locked(paper_oscillator):
    kappa = 2 * math.pi * 1.3e6
    base = optomech.CavityParams(kappa=kappa)
    g0 = optomech.position_coupling(base, paper_oscillator)
    d0 = optomech.locked_bare_detuning(base, g0, paper_oscillator.omega)
    return optomech.CavityParams(kappa=kappa, bare_detuning=d0)


@pytest.fixture
def si_ohmic(paper_oscillator):
    osc = paper_oscillator
    return bath.OhmicCutoff(
        coupling=osc.mass * osc.gamma / math.pi, cutoff=1e7 * osc.omega
    )


def test_cavity_params_validate():
    with pytest.raises(DomainError):
        optomech.CavityParams(kappa=0.0)
    with pytest.raises(DomainError):
        optomech.CavityParams(kappa=1.0, efficiency=1.5)
    with pytest.raises(DomainError):
        optomech.CavityParams(kappa=1.0, input_power=-1.0)


def test_drive_amplitude_closed_form():
    e = optomech.drive_amplitude(1e-4, 2 * math.pi * 1.3e6, 1.7704e15)
    assert math.isclose(
        e, math.sqrt(2 * 1e-4 * 2 * math.pi * 1.3e6 / (HBAR * 1.7704e15)),
        rel_tol=1e-14,
    )
    assert math.isclose(e, 93541176375.227219, rel_tol=1e-10)


def test_position_coupling_frozen(paper_oscillator):
    base = optomech.CavityParams(kappa=2 * math.pi * 1.3e6)
    g0 = optomech.position_coupling(base, paper_oscillator)
    assert math.isclose(g0, 61.944224429961146, rel_tol=1e-10)


def test_locked_steady_state_has_zero_effective_detuning(paper_oscillator, cavity_locked):
    g0 = optomech.position_coupling(cavity_locked, paper_oscillator)
    ss = optomech.solve_steady_state(cavity_locked, g0, paper_oscillator.omega)
    assert abs(ss.detuning) < 1e-10 * cavity_locked.kappa
    assert math.isclose(ss.photon_number, 131147257.52038303, rel_tol=1e-8)
    assert not ss.multistable
    assert max(ss.residuals) < 1e-10
    assert math.isclose(
        cavity_locked.bare_detuning, 87626.363472112906, rel_tol=1e-10
    )


def test_steady_state_degenerate_branches(paper_oscillator):
    cav = optomech.CavityParams(kappa=1e6, bare_detuning=3e5, input_power=0.0)
    ss0 = optomech.solve_steady_state(cav, 10.0, paper_oscillator.omega, drive=0.0)
    assert ss0.photon_number == 0.0 and ss0.detuning == 3e5
    ss1 = optomech.solve_steady_state(cav, 0.0, paper_oscillator.omega, drive=2e6)
    expect = 2e6 / complex(1e6, 3e5)
    assert abs(ss1.alpha_s - expect) < 1e-9 * abs(expect)


def test_susceptibility_reduces_at_zero_detuning(paper_oscillator):
    osc = paper_oscillator
    w = np.linspace(0.8, 1.2, 11) * osc.omega
    chi = optomech.effective_susceptibility(
        w, osc.omega, osc.gamma, 60.0, 1e4 + 0j, 0.0, 8e6
    )
    bare = osc.omega / (osc.omega**2 + 1j * osc.gamma * w - w**2)
    np.testing.assert_allclose(chi, bare, rtol=1e-13)


def test_noise_spectra_forms(paper_oscillator, si_ohmic):
    osc = paper_oscillator
    w = np.array([0.9, 1.0, 1.1]) * osc.omega
    s_th, s_rp = optomech.noise_spectra(w, si_ohmic, osc, 300.0, 0.0, 8e6, 60.0, 1e4)
    dens = bath.eval_density(si_ohmic, w)
    occ = 1.0 / np.tanh(HBAR * w / (2 * 1.380649e-23 * 300.0)) - 1.0
    np.testing.assert_allclose(s_th, math.pi * dens / (osc.mass * osc.omega) * occ, rtol=1e-12)
    np.testing.assert_allclose(
        s_rp, 2 * 8e6 * 3600.0 * 1e8 / (8e6**2 + w**2), rtol=1e-12
    )
    zero_th, _ = optomech.noise_spectra(w, si_ohmic, osc, 0.0, 0.0, 8e6, 60.0, 1e4)
    np.testing.assert_array_equal(zero_th, np.zeros(3))


def test_radiation_pressure_is_negligible(paper_oscillator, si_ohmic, cavity_locked):
    osc = paper_oscillator
    g0 = optomech.position_coupling(cavity_locked, osc)
    ss = optomech.solve_steady_state(cavity_locked, g0, osc.omega)
    w = 2 * math.pi * np.linspace(885e3, 945e3, 601)
    s_th, s_rp = optomech.noise_spectra(
        w, si_ohmic, osc, 300.0, ss.detuning, cavity_locked.kappa,
        ss.coupling_dimless, ss.alpha_s,
    )
    ratio = s_rp / s_th
    assert np.min(ratio) > 2.0e-7 and np.max(ratio) < 2.4e-7


def test_full_and_reduced_modes_differ_by_a_constant(paper_oscillator, si_ohmic, cavity_locked):
    osc = paper_oscillator
    g0 = optomech.position_coupling(cavity_locked, osc)
    ss = optomech.solve_steady_state(cavity_locked, g0, osc.omega)
    w = 2 * math.pi * np.linspace(885e3, 945e3, 601)
    full = optomech.output_psd(w, si_ohmic, osc, cavity_locked, steady=ss, mode="full")
    red = optomech.output_psd(w, si_ohmic, osc, mode="reduced")
    ratio = full / red
    assert np.ptp(ratio) / np.mean(ratio) < 1e-3
    # regression pin of the measured flatness
    assert np.ptp(ratio) / np.mean(ratio) < 5e-8


def test_full_mode_requires_cavity(paper_oscillator, si_ohmic):
    w = np.array([5e6])
    with pytest.raises(DomainError):
        optomech.output_psd(w, si_ohmic, paper_oscillator, mode="full")


def test_position_variance_equipartition(paper_oscillator, si_ohmic, cavity_locked):
    osc = paper_oscillator
    g0 = optomech.position_coupling(cavity_locked, osc)
    ss = optomech.solve_steady_state(cavity_locked, g0, osc.omega)
    w = np.unique(np.concatenate([
        np.linspace(1e3, osc.omega * 0.97, 4000),
        np.linspace(osc.omega * 0.97, osc.omega * 1.03, 120001),
        np.linspace(osc.omega * 1.03, osc.omega * 40, 40000),
    ]))
    psd = optomech.position_psd(w, si_ohmic, osc, 300.0, ss, cavity_locked.kappa)
    var = np.trapezoid(psd, w) / math.pi  # one-sided
    assert abs(var / dimensionless_temperature(osc) - 1.0) < 0.01


def test_output_spectrum_grid_peaks_on_resonance(paper_oscillator, si_ohmic, cavity_locked):
    grid = optomech.output_spectrum_grid(
        885e3, 945e3, 601, si_ohmic, paper_oscillator, cavity_locked, mode="full"
    )
    f = grid.omega / (2 * math.pi)
    assert math.isclose(f[int(np.argmax(grid.psd))], 914000.0, abs_tol=1e-6)
    assert grid.meta["mode"] == "full"
    assert grid.meta["kappa_rad_s"] == cavity_locked.kappa
    with pytest.raises(DomainError):
        optomech.output_spectrum_grid(
            945e3, 885e3, 11, si_ohmic, paper_oscillator, cavity_locked
        )

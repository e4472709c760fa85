import math

import numpy as np
import pytest

from bathspec import bath, synth
from bathspec.errors import ConfigError
from bathspec.units import OscillatorParams


@pytest.fixture
def window_si(paper_oscillator):
    osc = paper_oscillator
    return bath.PiecewisePowerWindow(
        density_at_ref=osc.omega, omega_ref=osc.omega, exponent=-2.3,
        half_window=2 * math.pi * 32e3, cutoff=2 * math.pi * 4.9e6,
    )


def normalized_config(model, osc, **kw):
    probe = synth.SynthConfig(model=model, oscillator=osc, scale=1.0,
                              n_samples=kw.get("n_samples", 2**14),
                              sample_rate=kw.get("sample_rate", 1e7), seed=0)
    f = np.fft.rfftfreq(probe.n_samples, d=1.0 / probe.sample_rate)
    peak = float(np.max(synth.target_psd(probe, f)))
    kw.setdefault("scale", 1.0 / peak)
    return synth.SynthConfig(model=model, oscillator=osc, **kw)


def test_config_validation(window_si, paper_oscillator):
    with pytest.raises(ConfigError):
        synth.SynthConfig(model=window_si, oscillator=paper_oscillator, scale=0.0)
    with pytest.raises(ConfigError):
        synth.SynthConfig(model=window_si, oscillator=paper_oscillator, floor=-1.0)
    with pytest.raises(ConfigError):
        synth.SynthConfig(model=window_si, oscillator=paper_oscillator, n_samples=2)
    cfg = synth.SynthConfig(model=window_si, oscillator=paper_oscillator)
    truth = cfg.truth()
    assert truth["exponent"] == -2.3
    assert truth["omega_inf"] == paper_oscillator.omega


def test_contaminant_mode_shape():
    m = synth.ContaminantMode(center_hz=1.2e6, width_hz=1.2e6 / 215.0, height=0.1)
    # peak height equals `height` at the center
    assert math.isclose(m.psd(np.array([1.2e6]))[0], 0.1, rel_tol=1e-12)
    # in-window leakage is tiny (the mode sits far above the window)
    f = np.linspace(885e3, 945e3, 601)
    assert np.max(m.psd(f)) / 0.1 < 1e-3
    assert math.isclose(np.max(m.psd(f)) / 0.1, 1.4992454149311311e-4, rel_tol=1e-6)


def test_target_psd_composition(window_si, paper_oscillator):
    modes = (synth.ContaminantMode(1.2e6, 1.2e6 / 215.0, 0.05),)
    cfg = synth.SynthConfig(
        model=window_si, oscillator=paper_oscillator, scale=2.0, floor=0.25,
        modes=modes, n_samples=2**12, sample_rate=1e7,
    )
    base = synth.SynthConfig(
        model=window_si, oscillator=paper_oscillator, scale=2.0,
        n_samples=2**12, sample_rate=1e7,
    )
    f = np.fft.rfftfreq(2**12, d=1e-7)
    got = synth.target_psd(cfg, f)
    expect = synth.target_psd(base, f) + 0.25 + modes[0].psd(f)
    expect[0] = 0.0
    np.testing.assert_allclose(got, expect, rtol=1e-12)
    assert got[0] == 0.0


def test_timeseries_parseval_is_exact(window_si, paper_oscillator):
    cfg = normalized_config(
        window_si, paper_oscillator, n_samples=2**14, floor=1e-6, seed=11
    )
    ts = synth.synth_timeseries(cfg, index=3)
    assert ts.samples.size == 2**14
    assert math.isclose(ts.duration, 2**14 / 1e7, rel_tol=1e-12)
    f = np.fft.rfftfreq(2**14, d=1e-7)
    spec = np.abs(np.fft.rfft(ts.samples)) ** 2
    # one-sided periodogram, DC and Nyquist singly weighted
    psd = 2.0 * spec / (1e7 * 2**14)
    psd[0] *= 0.5
    psd[-1] *= 0.5
    df = f[1] - f[0]
    assert math.isclose(np.sum(psd) * df, np.mean(ts.samples**2), rel_tol=1e-12)


def test_timeseries_needs_power_of_two(window_si, paper_oscillator):
    cfg = normalized_config(window_si, paper_oscillator, n_samples=3000)
    with pytest.raises(ConfigError):
        synth.synth_timeseries(cfg)


def test_timeseries_deterministic_per_index(window_si, paper_oscillator):
    cfg = normalized_config(window_si, paper_oscillator, n_samples=2**12, seed=5)
    a = synth.synth_timeseries(cfg, index=0)
    b = synth.synth_timeseries(cfg, index=0)
    c = synth.synth_timeseries(cfg, index=1)
    np.testing.assert_array_equal(a.samples, b.samples)
    assert not np.array_equal(a.samples, c.samples)


def test_averaged_spectrum_statistics(window_si, paper_oscillator):
    cfg = normalized_config(
        window_si, paper_oscillator, n_samples=100000, floor=1e-6, seed=20260816
    )
    sp = synth.synth_averaged_spectrum(cfg, 100, index=0)
    assert sp.n_averages == 100
    f = np.fft.rfftfreq(100000, d=1e-7)
    target = synth.target_psd(cfg, f)
    mask = (f >= 885e3) & (f <= 945e3)
    rel = sp.psd[mask] / target[mask] - 1.0
    # chi^2_{200}/200 per bin: sd ~ 0.1, worst of ~600 bins stays under 5 sd
    assert np.max(np.abs(rel)) < 0.5
    assert abs(np.mean(rel)) < 0.01
    assert abs(np.std(rel) / 0.1 - 1.0) < 0.1
    assert sp.provenance["stream_index"] == 0


def test_averaged_spectrum_matches_timeseries_route(window_si, paper_oscillator):
    # both routes draw from the same per-bin law; compare window-band means
    from bathspec import estimate

    cfg = normalized_config(
        window_si, paper_oscillator, n_samples=2**14, floor=1e-6, seed=9
    )
    n_avg = 64
    acc = None
    for i in range(n_avg):
        ts = synth.synth_timeseries(cfg, index=i)
        p = estimate.periodogram(ts.samples, cfg.sample_rate)
        acc = p.psd if acc is None else acc + p.psd
    via_time = acc / n_avg
    via_draw = synth.synth_averaged_spectrum(cfg, n_avg, index=0).psd
    f = np.fft.rfftfreq(2**14, d=1e-7)
    mask = (f >= 800e3) & (f <= 1.1e6)
    a = np.mean(via_time[mask])
    b = np.mean(via_draw[mask])
    # independent draws of the same statistic: agree inside a few combined sd
    assert abs(a / b - 1.0) < 0.05


def test_add_contaminants_is_additive(window_si, paper_oscillator):
    from bathspec import estimate

    f = np.linspace(1e5, 2e6, 401)
    sp = estimate.Spectrum(frequencies_hz=f, psd=np.ones_like(f), n_averages=4)
    mode = synth.ContaminantMode(1.2e6, 5e3, 2.0)
    out = synth.add_contaminants(sp, modes=(mode,), floor=0.5)
    np.testing.assert_allclose(out.psd, 1.0 + 0.5 + mode.psd(f), rtol=1e-12)
    assert out.n_averages == 4

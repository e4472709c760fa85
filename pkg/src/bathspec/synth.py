"""Reproducible synthetic measurement data with known ground truth.

Two product families, both deterministic per (config, seed):

* synth_timeseries realizes a real Gaussian process whose one-sided PSD is
  the reduced-mode output spectrum plus a flat floor and optional extra
  resonances, by drawing independent complex Gaussian FFT-bin amplitudes
  (spectral factorization - exact on the grid) and inverse-transforming.
* synth_averaged_spectrum skips the time domain and draws each bin of an
  n-average periodogram directly from its exact sampling distribution,
  target_PSD * chi-squared_{2n} / (2n).

RNG streams derive from (seed, purpose, index) via streams.stream, so
record j is reproducible independently of how many workers produced the
batch or in which order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import streams
from .bath import eval_density
from .errors import ConfigError, DomainError
from .estimate import Spectrum
from .units import OscillatorParams

__all__ = [
    "TimeSeries",
    "ContaminantMode",
    "SynthConfig",
    "target_psd",
    "synth_timeseries",
    "synth_averaged_spectrum",
    "add_contaminants",
]


@dataclass(frozen=True)
class TimeSeries:
    """Uniformly sampled real record with its generating seed and truth."""

    sample_rate: float
    samples: np.ndarray
    seed: int
    truth: dict = field(default_factory=dict)

    def __post_init__(self):
        x = np.asarray(self.samples, dtype=float)
        object.__setattr__(self, "samples", x)
        if x.ndim != 1 or x.size == 0:
            raise DomainError("samples must be a nonempty 1-D array")
        if not np.all(np.isfinite(x)):
            raise DomainError("samples must be finite")
        if not self.sample_rate > 0.0:
            raise DomainError("sample rate must be positive")

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate


@dataclass(frozen=True)
class ContaminantMode:
    """Extra mechanical resonance: PSD = height * (g*W)^2 / ((W^2-w^2)^2 + (g*w)^2).

    center_hz and width_hz are the resonance frequency and full linewidth in
    ordinary frequency; height is the peak PSD value it adds.
    """

    center_hz: float
    width_hz: float
    height: float

    def __post_init__(self):
        if not self.center_hz > 0.0:
            raise ConfigError("mode center must be positive")
        if not self.width_hz > 0.0:
            raise ConfigError("mode width must be positive")
        if self.height < 0.0:
            raise ConfigError("mode height must be >= 0")

    def psd(self, freqs_hz):
        w = 2.0 * math.pi * np.asarray(freqs_hz, dtype=float)
        w0 = 2.0 * math.pi * self.center_hz
        g = 2.0 * math.pi * self.width_hz
        return self.height * (g * w0) ** 2 / ((w0**2 - w**2) ** 2 + (g * w) ** 2)


@dataclass(frozen=True)
class SynthConfig:
    """Ground-truth description of a synthetic record.

    model / oscillator / scale define the reduced-mode target PSD
    scale * I(w) / (w ((Omega^2-w^2)^2 + (gamma w)^2)); floor adds a flat
    background and modes add extra resonances.  n_samples and sample_rate
    fix the FFT grid; seed roots all randomness.
    """

    model: object
    oscillator: OscillatorParams
    scale: float = 1.0
    floor: float = 0.0
    modes: tuple = ()
    n_samples: int = 2**20
    sample_rate: float = 1e7
    seed: int = 0

    def __post_init__(self):
        if not self.scale > 0.0:
            raise ConfigError("scale must be positive")
        if self.floor < 0.0:
            raise ConfigError("floor must be >= 0")
        object.__setattr__(self, "modes", tuple(self.modes))
        for m in self.modes:
            if not isinstance(m, ContaminantMode):
                raise ConfigError("modes must be ContaminantMode instances")
        if self.n_samples < 4:
            raise ConfigError("need at least 4 samples")
        if not self.sample_rate > 0.0:
            raise ConfigError("sample rate must be positive")
        if not (0 <= int(self.seed) < 2**64):
            raise ConfigError("seed must fit in an unsigned 64-bit integer")

    def truth(self) -> dict:
        exponent = getattr(self.model, "exponent", None)
        if exponent is None and type(self.model).__name__ == "OhmicCutoff":
            exponent = 1.0
        return {
            "exponent": exponent,
            "scale": self.scale,
            "omega_inf": self.oscillator.omega,
            "gamma_inf": self.oscillator.gamma,
            "floor": self.floor,
        }


def target_psd(config: SynthConfig, freqs_hz) -> np.ndarray:
    """One-sided target PSD on the given grid; the DC bin is zero."""
    f = np.asarray(freqs_hz, dtype=float)
    w = 2.0 * math.pi * f
    osc = config.oscillator
    psd = np.zeros_like(f)
    pos = w > 0.0
    wp = w[pos]
    dens = eval_density(config.model, wp)
    den = (osc.omega**2 - wp**2) ** 2 + (osc.gamma * wp) ** 2
    psd[pos] = config.scale * dens / (wp * den)
    psd += config.floor
    for mode in config.modes:
        psd += mode.psd(f)
    psd[~pos] = 0.0
    if np.any(psd < 0.0) or not np.all(np.isfinite(psd)):
        raise ConfigError("target PSD must be finite and nonnegative everywhere")
    return psd


def synth_timeseries(config: SynthConfig, index: int = 0) -> TimeSeries:
    """Draw one real record whose periodogram has the target PSD exactly.

    Interior FFT bins get independent complex Gaussians with
    E|X_k|^2 = PSD * fs * n / 2, the Nyquist bin a real Gaussian with
    E X^2 = PSD * fs * n, and DC is zero; irfft enforces the Hermitian
    symmetry.  index selects the (seed, timeseries, index) RNG stream for
    batch-parallel generation.
    """
    n = config.n_samples
    if n & (n - 1):
        raise ConfigError(f"record length {n} is not a power of two")
    fs = config.sample_rate
    freqs = np.fft.rfftfreq(n, d=1.0 / fs)
    psd = target_psd(config, freqs)

    rng = streams.stream(config.seed, streams.PURPOSE_TIMESERIES, index)
    z = rng.standard_normal((2, freqs.size - 2))
    z_nyq = rng.standard_normal()

    amps = np.zeros(freqs.size, dtype=complex)
    interior = np.sqrt(psd[1:-1] * fs * n / 4.0)
    amps[1:-1] = interior * (z[0] + 1j * z[1])
    amps[-1] = math.sqrt(psd[-1] * fs * n) * z_nyq
    samples = np.fft.irfft(amps, n)
    return TimeSeries(
        sample_rate=fs, samples=samples, seed=config.seed, truth=config.truth()
    )


def synth_averaged_spectrum(config: SynthConfig, n_averages: int, index: int = 0) -> Spectrum:
    """Draw an n-average periodogram directly: PSD * chi-squared_{2n}/(2n) per bin.

    This is the exact distribution of the bin-wise mean of n periodograms of
    records from synth_timeseries, without the round trip through the time
    domain.  index selects the (seed, spectrum, index) stream.
    """
    n_averages = int(n_averages)
    if n_averages < 1:
        raise DomainError("need n_averages >= 1")
    freqs = np.fft.rfftfreq(config.n_samples, d=1.0 / config.sample_rate)
    psd = target_psd(config, freqs)
    rng = streams.stream(config.seed, streams.PURPOSE_SPECTRUM, index)
    draws = rng.chisquare(2 * n_averages, size=freqs.size) / (2.0 * n_averages)
    return Spectrum(
        frequencies_hz=freqs,
        psd=psd * draws,
        n_averages=n_averages,
        provenance={
            "source": "synth",
            "seed": config.seed,
            "stream_index": index,
            "truth": config.truth(),
        },
    )


def add_contaminants(spectrum: Spectrum, modes=(), floor=0.0) -> Spectrum:
    """Add resonance PSDs and a flat floor to an existing spectrum."""
    if floor < 0.0:
        raise ConfigError("floor must be >= 0")
    psd = spectrum.psd.copy()
    for mode in modes:
        if not isinstance(mode, ContaminantMode):
            raise ConfigError("modes must be ContaminantMode instances")
        psd = psd + mode.psd(spectrum.frequencies_hz)
    psd = psd + floor
    prov = dict(spectrum.provenance)
    prov["contaminants"] = {"n_modes": len(tuple(modes)), "floor": floor}
    return Spectrum(
        frequencies_hz=spectrum.frequencies_hz,
        psd=psd,
        n_averages=spectrum.n_averages,
        provenance=prov,
    )

"""Spectral-exponent estimation pipeline.

Turns raw time series into averaged spectra and fits the low-frequency
exponent k of the driving spectrum through the mechanical response

    S(omega) = C * omega**k / (omega * ((Om**2 - omega**2)**2 + (g*omega)**2))

on a fixed frequency window around the resonance.  For a candidate k the
scale C is eliminated in closed form, so the fit is a 1-D global search in
k, done by simulated annealing with restarts plus a golden-section polish
(kernels in _accel, numba-compiled when available).

The ensemble layer fits many averaged spectra independently, histograms the
exponents, bootstrap-resamples the ensemble mean, and maps the mean exponent
to a non-Markovianity lower bound.
"""

from __future__ import annotations

import concurrent.futures
import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize

from . import _accel, qbm, streams
from .errors import (
    ConfigError,
    DataError,
    DegenerateDataError,
    DomainError,
)

__all__ = [
    "Spectrum",
    "FitWindow",
    "FitOptions",
    "FitResult",
    "ExponentEnsemble",
    "BootstrapSummary",
    "NonMarkovBound",
    "batch_series",
    "periodogram",
    "average_spectra",
    "fit_exponent",
    "estimate_shape_params",
    "ensemble_estimate",
    "bootstrap",
    "k_to_nonmarkovianity",
]


# ---------------------------------------------------------------------------
# domain types


@dataclass(frozen=True)
class Spectrum:
    """One-sided PSD on a strictly increasing frequency grid (Hz)."""

    frequencies_hz: np.ndarray
    psd: np.ndarray
    n_averages: int = 1
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        f = np.asarray(self.frequencies_hz, dtype=float)
        s = np.asarray(self.psd, dtype=float)
        object.__setattr__(self, "frequencies_hz", f)
        object.__setattr__(self, "psd", s)
        if f.ndim != 1 or s.shape != f.shape or f.size == 0:
            raise DataError("spectrum needs matching 1-D frequency and PSD arrays")
        bad = np.flatnonzero(~(np.isfinite(f) & np.isfinite(s)))
        if bad.size:
            head = ", ".join(str(int(i)) for i in bad[:10])
            raise DataError(
                f"spectrum has {bad.size} non-finite bins (rows {head}"
                + (", ..." if bad.size > 10 else "")
                + ")"
            )
        if np.any(np.diff(f) <= 0.0) or f[0] < 0.0:
            raise DataError("frequency grid must be nonnegative and strictly increasing")
        if np.any(s < 0.0):
            raise DataError("PSD values must be nonnegative")
        if self.n_averages < 1:
            raise DataError("n_averages must be >= 1")


@dataclass(frozen=True)
class FitWindow:
    """Fit band [f_min_hz, f_max_hz] plus frozen shape parameters (rad/s).

    omega_inf / gamma_inf are the oscillator's renormalized frequency and
    damping used inside the fit model; they may be left None and filled in
    later (with_shape) after estimate_shape_params has run.
    """

    f_min_hz: float
    f_max_hz: float
    omega_inf: float | None = None
    gamma_inf: float | None = None

    def __post_init__(self):
        if not (0.0 < self.f_min_hz < self.f_max_hz):
            raise DomainError("need 0 < f_min_hz < f_max_hz")
        if (self.omega_inf is None) != (self.gamma_inf is None):
            raise DomainError("omega_inf and gamma_inf must be set together")
        if self.omega_inf is not None:
            if self.omega_inf <= 0.0 or self.gamma_inf <= 0.0:
                raise DomainError("shape parameters must be positive")
            f_res = self.omega_inf / (2.0 * math.pi)
            if not (self.f_min_hz < f_res < self.f_max_hz):
                raise DomainError("resonance must lie inside the fit window")

    def with_shape(self, omega_inf, gamma_inf) -> "FitWindow":
        return replace(self, omega_inf=float(omega_inf), gamma_inf=float(gamma_inf))


@dataclass(frozen=True)
class FitOptions:
    """Optimizer configuration for fit_exponent.

    objective_space: "linear" squares PSD residuals (default), "log" squares
    log-PSD residuals.  weighting: "uniform", or "variance" to divide linear
    residuals by the data value (chi-squared-motivated 1/S^2 weights).
    """

    objective_space: str = "linear"
    weighting: str = "uniform"
    k_lo: float = -6.0
    k_hi: float = 4.0
    anneal_steps: int = 200
    cooling: float = 0.95
    restarts: int = 5
    grid_points: int = 21
    polish_tol: float = 1e-10
    seed: int = 0

    def __post_init__(self):
        if self.objective_space not in ("linear", "log"):
            raise ConfigError("objective_space must be 'linear' or 'log'")
        if self.weighting not in ("uniform", "variance"):
            raise ConfigError("weighting must be 'uniform' or 'variance'")
        if not self.k_lo < self.k_hi:
            raise ConfigError("need k_lo < k_hi")
        if not (0.0 < self.cooling < 1.0):
            raise ConfigError("cooling must be in (0, 1)")
        if self.anneal_steps < 1 or self.restarts < 1 or self.grid_points < 2:
            raise ConfigError("anneal_steps, restarts >= 1 and grid_points >= 2")


@dataclass(frozen=True)
class FitResult:
    """Best exponent, its scale, and annealing diagnostics.

    scale is the C of the model above with omega in rad/s.  boundary is set
    when the optimum landed on the edge of the k search domain.
    """

    k: float
    scale: float
    residual: float
    objective_space: str
    iterations: int
    final_temperature: float
    restarts: int
    boundary: bool

    def __post_init__(self):
        if self.residual < 0.0:
            raise DomainError("residual must be >= 0")
        if not self.scale > 0.0:
            raise DomainError("scale must be positive")


@dataclass(frozen=True)
class ExponentEnsemble:
    """Per-spectrum fit results with summary statistics and histogram.

    indices holds the position of each successful fit in the input
    sequence; failures the (position, message) of skipped ones.
    """

    results: tuple
    mean_k: float
    std_k: float
    hist_edges: np.ndarray
    hist_counts: np.ndarray
    failures: tuple = ()
    indices: tuple = ()

    @property
    def n_fits(self) -> int:
        return len(self.results)

    @property
    def sem_k(self) -> float:
        return self.std_k / math.sqrt(len(self.results))


@dataclass(frozen=True)
class BootstrapSummary:
    mean: float
    std: float
    percentiles: dict
    n_resamples: int


@dataclass(frozen=True)
class NonMarkovBound:
    """Non-Markovianity lower bound mapped from a fitted exponent ensemble."""

    mean_k: float
    std_k: float
    n_fits: int
    omega_ref: float
    half_window: float
    ratio_bound: float
    xi_bound: float
    xi_std: float
    xi_sem: float


# ---------------------------------------------------------------------------
# spectra from time series


def batch_series(ts, n):
    """Split a time series into consecutive non-overlapping length-n batches.

    Accepts a TimeSeries-like object (anything with .samples) or a raw
    array.  The remainder past the last full batch is discarded.
    """
    samples = np.asarray(getattr(ts, "samples", ts), dtype=float)
    if samples.ndim != 1:
        raise DomainError("need a 1-D sample array")
    n = int(n)
    if n <= 0:
        raise DomainError("batch length must be positive")
    if samples.size < n:
        raise DomainError(f"series ({samples.size} samples) shorter than one batch ({n})")
    count = samples.size // n
    return [samples[i * n : (i + 1) * n] for i in range(count)]


def periodogram(batch, sample_rate, taper="rect") -> Spectrum:
    """One-sided rectangular-window periodogram, DC and Nyquist half-weighted.

    taper="hann" applies a periodic Hann window with power normalization
    (unbiased for broadband signals).
    """
    x = np.asarray(batch, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise DomainError("need a 1-D batch with at least 2 samples")
    fs = float(sample_rate)
    if fs <= 0.0:
        raise DomainError("sample rate must be positive")
    n = x.size
    if taper == "rect":
        win_power = float(n)
        xw = x
    elif taper == "hann":
        w = 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)
        win_power = float(np.sum(w * w))
        xw = x * w
    else:
        raise ConfigError("taper must be 'rect' or 'hann'")
    spec = np.fft.rfft(xw)
    psd = (2.0 / (fs * win_power)) * np.abs(spec) ** 2
    psd[0] *= 0.5
    if n % 2 == 0:
        psd[-1] *= 0.5
    freqs = np.fft.rfftfreq(n, d=1.0 / fs)
    return Spectrum(
        frequencies_hz=freqs,
        psd=psd,
        n_averages=1,
        provenance={"source": "periodogram", "taper": taper, "n_samples": n},
    )


def average_spectra(spectra, group_size):
    """Bin-wise means of consecutive groups; n_averages accumulates.

    The count must be divisible by group_size; a remainder is dropped with
    a warning.  All inputs must share the frequency grid exactly.
    """
    spectra = list(spectra)
    g = int(group_size)
    if g <= 0:
        raise DomainError("group size must be positive")
    if not spectra:
        raise DomainError("need at least one spectrum")
    grid = spectra[0].frequencies_hz
    for i, sp in enumerate(spectra[1:], start=1):
        if sp.frequencies_hz.shape != grid.shape or not np.array_equal(
            sp.frequencies_hz, grid
        ):
            raise DomainError(f"spectrum {i} is on a different frequency grid")
    n_groups, rem = divmod(len(spectra), g)
    if rem:
        warnings.warn(f"dropping {rem} spectra past the last full group of {g}")
    if n_groups == 0:
        raise DomainError(f"fewer spectra ({len(spectra)}) than one group ({g})")
    out = []
    for j in range(n_groups):
        members = spectra[j * g : (j + 1) * g]
        mean_psd = np.mean([m.psd for m in members], axis=0)
        out.append(
            Spectrum(
                frequencies_hz=grid,
                psd=mean_psd,
                n_averages=sum(m.n_averages for m in members),
                provenance={"source": "average", "group_size": g, "group_index": j},
            )
        )
    return out


# ---------------------------------------------------------------------------
# exponent fit


def _window_arrays(spectrum, window, options):
    """Mask the window and build (y, logx, logden, scale conversion)."""
    if window.omega_inf is None:
        raise ConfigError("fit window needs shape parameters (use with_shape)")
    f = spectrum.frequencies_hz
    mask = (f >= window.f_min_hz) & (f <= window.f_max_hz)
    n_bins = int(np.count_nonzero(mask))
    if n_bins < 10:
        raise DomainError(f"window holds {n_bins} bins, need at least 10")
    s = spectrum.psd[mask]
    if not np.any(s > 0.0):
        raise DegenerateDataError("window carries zero total power")
    x = 2.0 * math.pi * f[mask] / window.omega_inf
    g2 = (window.gamma_inf / window.omega_inf) ** 2
    logx = np.log(x)
    logden = np.log((1.0 - x * x) ** 2 + g2 * x * x)
    if options.objective_space == "log":
        if np.any(s <= 0.0):
            raise DegenerateDataError("log objective needs strictly positive bins")
        y = np.log(s)
    elif options.weighting == "variance":
        if np.any(s <= 0.0):
            raise DegenerateDataError("variance weighting needs strictly positive bins")
        # dividing residuals by the data folds into the same kernel:
        # (s - C phi)/s = 1 - C exp((k-1) logx - (logden + log s))
        y = np.ones_like(s)
        logden = logden + np.log(s)
    else:
        y = s
    return np.ascontiguousarray(y), np.ascontiguousarray(logx), np.ascontiguousarray(logden)


def _restart_starts(k_lo, k_hi, k_grid_best, restarts):
    starts = [k_grid_best]
    for i in range(restarts - 1):
        starts.append(k_lo + (k_hi - k_lo) * (2 * i + 1) / (2 * max(1, restarts - 1)))
    return starts[:restarts]


def fit_exponent(spectrum, window, options=None, stream_index=0) -> FitResult:
    """Global fit of the driving-spectrum exponent on one averaged spectrum.

    Profiles out the scale in closed form, then runs simulated annealing in
    k (geometric cooling, pre-drawn uniforms from the (seed, fit, index)
    stream so results are deterministic and thread-order independent),
    restarts from spread-out starting points, and polishes the best walk by
    golden section.  Residual ties within 1e-12 relative resolve toward the
    k closest to 1.
    """
    opts = options or FitOptions()
    log_mode = opts.objective_space == "log"
    y, logx, logden = _window_arrays(spectrum, window, opts)

    ks_grid = np.linspace(opts.k_lo, opts.k_hi, opts.grid_points)
    r_grid = np.array(
        [_accel.fit_profile(y, logx, logden, k, log_mode)[0] for k in ks_grid]
    )
    t0 = float(np.max(r_grid) - np.min(r_grid))
    evals = opts.grid_points
    if t0 <= 0.0:
        # flat objective in k; nothing for annealing to do
        t0 = max(float(np.max(r_grid)), 1e-300)

    rng = streams.stream(opts.seed, streams.PURPOSE_FIT, stream_index)
    u = rng.random((opts.restarts, 2, opts.anneal_steps))

    k_grid_best = float(ks_grid[int(np.argmin(r_grid))])
    candidates = []
    t_final = t0
    for i, k0 in enumerate(_restart_starts(opts.k_lo, opts.k_hi, k_grid_best, opts.restarts)):
        k_a, _r_a, n_ev, t_final = _accel.anneal_restart(
            y, logx, logden, log_mode, k0, t0, opts.cooling,
            u[i, 0], u[i, 1], opts.k_lo, opts.k_hi,
        )
        evals += n_ev
        a = max(opts.k_lo, k_a - 0.5)
        b = min(opts.k_hi, k_a + 0.5)
        k_p = _accel.golden_polish(y, logx, logden, log_mode, a, b, opts.polish_tol)
        r_p, c_p = _accel.fit_profile(y, logx, logden, k_p, log_mode)
        evals += 2 + int(math.ceil(math.log(opts.polish_tol / max(b - a, opts.polish_tol))
                                   / math.log((math.sqrt(5.0) - 1.0) / 2.0)))
        candidates.append((r_p, k_p, c_p))

    r_best = min(c[0] for c in candidates)
    tol = 1e-12 * max(r_best, 1e-300)
    near = [c for c in candidates if c[0] <= r_best + tol]
    r_fit, k_fit, c_fit = min(near, key=lambda c: abs(c[1] - 1.0))

    if not c_fit > 0.0:
        raise DegenerateDataError("fitted scale is not positive")
    # convert the normalized-model scale to the omega-in-rad/s convention
    scale = c_fit * window.omega_inf ** (5.0 - k_fit)
    span = opts.k_hi - opts.k_lo
    boundary = (k_fit - opts.k_lo) < 1e-6 * span or (opts.k_hi - k_fit) < 1e-6 * span
    return FitResult(
        k=float(k_fit),
        scale=float(scale),
        residual=float(r_fit),
        objective_space=opts.objective_space,
        iterations=int(evals),
        final_temperature=float(t_final),
        restarts=opts.restarts,
        boundary=bool(boundary),
    )


def estimate_shape_params(pooled, window, rel_tol=1e-12, free_exponent=False,
                          objective_space="linear"):
    """Fit (omega_inf, gamma_inf) on a pooled spectrum with the exponent at 1.

    Nelder-Mead over (ln omega, ln gamma) with the scale profiled out,
    started from the window peak and its full width at half maximum; the
    solution is re-polished once from itself.  Returns values in rad/s.

    free_exponent=True co-fits the exponent as a third parameter (still
    returning only the shape pair).  With the exponent frozen at 1, data
    whose true exponent differs tilts the window and drags the fitted
    resonance by a few 1e-5 relative, which downstream exponent fits
    amplify into an O(0.1) bias; co-fitting removes that leak.
    objective_space="log" matches the shape fit's metric to log-space
    exponent fits, so the shape errors it leaves are the ones those fits
    are least sensitive to.
    """
    if objective_space not in ("linear", "log"):
        raise ConfigError("objective_space must be 'linear' or 'log'")
    f = pooled.frequencies_hz
    mask = (f >= window.f_min_hz) & (f <= window.f_max_hz)
    if np.count_nonzero(mask) < 10:
        raise DomainError("window holds fewer than 10 bins")
    fw = f[mask]
    s = pooled.psd[mask]
    ipk = int(np.argmax(s))
    if ipk == 0 or ipk == len(s) - 1:
        raise DegenerateDataError("no interior spectral peak inside the window")
    if not s[ipk] > 0.0:
        raise DegenerateDataError("window carries zero total power")
    log_mode = objective_space == "log"
    if log_mode and not np.all(s > 0.0):
        raise DegenerateDataError("log objective needs strictly positive bins")
    y = np.log(s) if log_mode else s

    omega0 = 2.0 * math.pi * fw[ipk]
    half = 0.5 * s[ipk]
    left = np.flatnonzero(s[:ipk] <= half)
    right = np.flatnonzero(s[ipk:] <= half)
    if left.size and right.size:
        gamma0 = 2.0 * math.pi * (fw[ipk + right[0]] - fw[left[-1]])
    else:
        gamma0 = omega0 / 100.0

    def objective(p):
        om, gam = math.exp(p[0]), math.exp(p[1])
        k = p[2] if free_exponent else 1.0
        x = 2.0 * math.pi * fw / om
        logden = np.log((1.0 - x * x) ** 2 + (gam / om) ** 2 * x * x)
        r, _ = _accel.fit_profile(y, np.log(x), logden, k, log_mode)
        return r

    p0 = np.array([math.log(omega0), math.log(gamma0)])
    if free_exponent:
        p0 = np.append(p0, 1.0)
    opts = {"xatol": rel_tol, "fatol": rel_tol * max(objective(p0), 1e-300),
            "maxiter": 4000, "maxfev": 4000}
    res = minimize(objective, p0, method="Nelder-Mead", options=opts)
    res = minimize(objective, res.x, method="Nelder-Mead", options=opts)
    omega_fit, gamma_fit = math.exp(res.x[0]), math.exp(res.x[1])
    f_res = omega_fit / (2.0 * math.pi)
    if not (window.f_min_hz < f_res < window.f_max_hz):
        raise DegenerateDataError("fitted resonance escaped the window")
    return omega_fit, gamma_fit


# ---------------------------------------------------------------------------
# ensembles


def ensemble_estimate(spectra, window, options=None, threads=1) -> ExponentEnsemble:
    """Fit every spectrum, then histogram and summarize the exponents.

    Per-spectrum failures are recorded as (index, message) and skipped, not
    fatal.  Fits may run on a thread pool; stream indices are positional so
    the outcome is independent of scheduling.
    """
    spectra = list(spectra)
    if len(spectra) < 2:
        raise DomainError("need at least 2 spectra for an ensemble")
    opts = options or FitOptions()
    threads = max(1, int(threads))

    def run(i):
        return fit_exponent(spectra[i], window, opts, stream_index=i)

    outcomes = [None] * len(spectra)
    if threads == 1:
        for i in range(len(spectra)):
            try:
                outcomes[i] = run(i)
            except (DataError, DomainError) as exc:
                outcomes[i] = exc
    else:
        with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as pool:
            futs = {pool.submit(run, i): i for i in range(len(spectra))}
            for fut in concurrent.futures.as_completed(futs):
                i = futs[fut]
                try:
                    outcomes[i] = fut.result()
                except (DataError, DomainError) as exc:
                    outcomes[i] = exc

    results = tuple(o for o in outcomes if isinstance(o, FitResult))
    indices = tuple(i for i, o in enumerate(outcomes) if isinstance(o, FitResult))
    failures = tuple(
        (i, str(o)) for i, o in enumerate(outcomes) if not isinstance(o, FitResult)
    )
    if not results:
        raise DegenerateDataError("every fit in the ensemble failed")

    ks = np.array([r.k for r in results])
    mean_k = float(np.mean(ks))
    std_k = float(np.std(ks, ddof=1)) if ks.size > 1 else 0.0
    nbins = max(5, int(round(math.sqrt(ks.size))))
    if np.ptp(ks) > 0.0:
        counts, edges = np.histogram(ks, bins=nbins)
    else:
        counts, edges = np.histogram(ks, bins=nbins, range=(ks[0] - 0.5, ks[0] + 0.5))
    return ExponentEnsemble(
        results=results,
        mean_k=mean_k,
        std_k=std_k,
        hist_edges=edges,
        hist_counts=counts,
        failures=failures,
        indices=indices,
    )


def bootstrap(spectra, window, options=None, n_resamples=1000, seed=None,
              ensemble=None) -> BootstrapSummary:
    """Resample the ensemble mean exponent with replacement.

    Each spectrum is fitted once (same per-index streams as
    ensemble_estimate), then the fitted k vector is resampled; deterministic
    for a given seed.  Passing an already-computed ensemble reuses its fits
    instead of refitting.
    """
    n_resamples = int(n_resamples)
    if n_resamples < 1:
        raise DomainError("need at least one resample")
    opts = options or FitOptions()
    if seed is None:
        seed = opts.seed
    if ensemble is not None:
        ks = np.array([r.k for r in ensemble.results])
    else:
        spectra = list(spectra)
        if not spectra:
            raise DomainError("need at least one spectrum")
        ks = np.array(
            [fit_exponent(sp, window, opts, stream_index=i).k for i, sp in enumerate(spectra)]
        )
    if ks.size == 0:
        raise DomainError("no fitted exponents to resample")
    rng = streams.stream(seed, streams.PURPOSE_BOOTSTRAP, 0)
    idx = rng.integers(0, ks.size, size=(n_resamples, ks.size))
    means = ks[idx].mean(axis=1)
    std = float(np.std(means, ddof=1)) if n_resamples > 1 else 0.0
    pct_levels = (2.5, 16.0, 50.0, 84.0, 97.5)
    pct = {q: float(v) for q, v in zip(pct_levels, np.percentile(means, pct_levels))}
    return BootstrapSummary(
        mean=float(np.mean(means)), std=std, percentiles=pct, n_resamples=n_resamples
    )


def k_to_nonmarkovianity(ensemble, omega_ref=1.0, half_window=0.03) -> NonMarkovBound:
    """Map the ensemble mean exponent to a non-Markovianity lower bound.

    Uses the window-limit exponent bound from qbm; the uncertainty on the
    bound comes from std_k by a first-order delta method.
    """
    bound = qbm.bound_from_exponent(ensemble.mean_k, omega_ref, half_window)
    big_l = math.log((omega_ref + half_window) / (omega_ref - half_window))
    dmu_dk = -2.0 * (4.0 / math.pi**2) * (1.0 - ensemble.mean_k) * big_l * big_l
    s = math.sqrt(1.0 + bound.ratio_bound)
    dxi_dmu = 1.0 / (s * (s + 1.0) ** 2)
    xi_std = abs(dmu_dk * dxi_dmu) * ensemble.std_k
    n = max(1, ensemble.n_fits)
    return NonMarkovBound(
        mean_k=ensemble.mean_k,
        std_k=ensemble.std_k,
        n_fits=ensemble.n_fits,
        omega_ref=omega_ref,
        half_window=half_window,
        ratio_bound=bound.ratio_bound,
        xi_bound=bound.measure_bound,
        xi_std=xi_std,
        xi_sem=xi_std / math.sqrt(n),
    )

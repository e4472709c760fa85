"""Open-system identification for a thermally driven harmonic oscillator.

Workflow: describe the environment's spectral density (bath), derive the
time-local master-equation coefficients and their long-time limits (qbm),
map the motion onto an optical readout (optomech), generate synthetic
records or averaged spectra (synth), recover the spectral exponent and a
non-Markovianity lower bound from windowed spectra (estimate), and drive
the whole chain from the command line (cli).
"""

from .bath import (
    LocalPowerLaw,
    OhmicCutoff,
    PiecewisePowerWindow,
    TabulatedDensity,
    eval_density,
    model_from_dict,
    rescaled_model,
)
from .errors import (
    BathspecError,
    ConfigError,
    DataError,
    DegenerateDataError,
    DomainError,
    NumericalError,
    SingularityError,
    UnphysicalParameterError,
)
from .estimate import (
    ExponentEnsemble,
    FitOptions,
    FitResult,
    FitWindow,
    Spectrum,
    average_spectra,
    batch_series,
    bootstrap,
    ensemble_estimate,
    estimate_shape_params,
    fit_exponent,
    k_to_nonmarkovianity,
    periodogram,
)
from .qbm import (
    asymptotic_coefficients,
    bound_from_exponent,
    coefficients_at,
    nonmarkovianity_measure,
    propagate_covariance,
)
from .synth import ContaminantMode, SynthConfig, TimeSeries, synth_averaged_spectrum, synth_timeseries
from .units import HBAR, KB, OscillatorParams, dimensionless_temperature

__version__ = "0.1.0"

__all__ = [
    "BathspecError",
    "ConfigError",
    "ContaminantMode",
    "DataError",
    "DegenerateDataError",
    "DomainError",
    "ExponentEnsemble",
    "FitOptions",
    "FitResult",
    "FitWindow",
    "HBAR",
    "KB",
    "LocalPowerLaw",
    "NumericalError",
    "OhmicCutoff",
    "OscillatorParams",
    "PiecewisePowerWindow",
    "SingularityError",
    "Spectrum",
    "SynthConfig",
    "TabulatedDensity",
    "TimeSeries",
    "UnphysicalParameterError",
    "asymptotic_coefficients",
    "average_spectra",
    "batch_series",
    "bootstrap",
    "bound_from_exponent",
    "coefficients_at",
    "dimensionless_temperature",
    "ensemble_estimate",
    "estimate_shape_params",
    "eval_density",
    "fit_exponent",
    "k_to_nonmarkovianity",
    "model_from_dict",
    "nonmarkovianity_measure",
    "periodogram",
    "propagate_covariance",
    "rescaled_model",
    "synth_averaged_spectrum",
    "synth_timeseries",
    "__version__",
]

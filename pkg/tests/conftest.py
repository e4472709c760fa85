import math

import numpy as np
import pytest

from bathspec import bath
from bathspec.units import OscillatorParams, natural_oscillator

# natural-units coupling that puts the asymptotic damping coefficient at 1/215
C215 = 2.0 / (215.0 * math.pi)


@pytest.fixture
def paper_oscillator():
    return OscillatorParams(
        mass=2.4e-11, omega=2 * math.pi * 914e3, quality=215.0, temperature=300.0
    )


@pytest.fixture
def ohmic40():
    return bath.OhmicCutoff(coupling=C215, cutoff=40.0)


@pytest.fixture
def osc_theta50():
    return natural_oscillator(215.0, 50.0)


@pytest.fixture
def osc_hot():
    return natural_oscillator(215.0, 6.84e6)


@pytest.fixture
def window_natural():
    return bath.PiecewisePowerWindow(
        density_at_ref=C215, omega_ref=1.0, exponent=-2.3, half_window=0.03, cutoff=1e7
    )


def reduced_shape_psd(f_hz, omega_inf, gamma_inf, exponent):
    """Noiseless reduced output shape with unit normalization constant."""
    w = 2.0 * math.pi * np.asarray(f_hz, dtype=float)
    x = w / omega_inf
    g = gamma_inf / omega_inf
    return x ** (exponent - 1.0) / ((1.0 - x * x) ** 2 + g * g * x * x)

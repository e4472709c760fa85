"""SI boundary layer for the nondimensional core.

Everything under :mod:`bathspec.qbm` works in natural units
(hbar = k_B = m = 1, frequencies in units of the oscillator frequency).
This module holds the SI constants and the conversions in and out:

* time is measured in 1/Omega,
* spectral densities I(omega) (units mass * frequency^2) are divided by
  m * Omega^2,
* temperature enters only through the dimensionless ratio
  theta = k_B T / (hbar Omega).
"""

from __future__ import annotations

from dataclasses import dataclass

HBAR = 1.054571817e-34  # J s
KB = 1.380649e-23  # J / K


@dataclass(frozen=True)
class OscillatorParams:
    """Mechanical oscillator in SI units.

    Parameters
    ----------
    mass : float
        Effective mass in kg.
    omega : float
        Angular resonance frequency in rad/s.
    quality : float
        Quality factor (dimensionless).
    temperature : float
        Bath temperature in K.
    """

    mass: float
    omega: float
    quality: float
    temperature: float

    def __post_init__(self):
        if not (self.mass > 0 and self.omega > 0):
            raise ValueError("mass and omega must be positive")
        if not (self.quality > 0):
            raise ValueError("quality factor must be positive")
        if not (self.temperature >= 0):
            raise ValueError("temperature must be nonnegative")

    @property
    def gamma(self) -> float:
        """Operational energy damping rate Omega/Q in rad/s."""
        return self.omega / self.quality

    @property
    def freq_hz(self) -> float:
        return self.omega / (2.0 * 3.141592653589793)


def dimensionless_temperature(osc: OscillatorParams) -> float:
    """theta = k_B T / (hbar Omega) for the oscillator's own frequency."""
    return KB * osc.temperature / (HBAR * osc.omega)


def temperature_for_theta(theta: float, omega: float = 1.0) -> float:
    """Kelvin temperature that realises a given theta at frequency omega."""
    return theta * HBAR * omega / KB


def natural_oscillator(quality: float, theta: float) -> OscillatorParams:
    """Oscillator with m = Omega = 1 whose theta equals the given value.

    Convenience for working directly in natural units: the SI fields are
    chosen so every conversion in this module collapses to the identity
    (mass 1 kg, omega 1 rad/s, temperature theta * hbar / k_B).
    """
    return OscillatorParams(
        mass=1.0,
        omega=1.0,
        quality=quality,
        temperature=temperature_for_theta(theta, 1.0),
    )

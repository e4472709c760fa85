"""Optomechanical readout chain: cavity steady state, effective mechanical
susceptibility, thermal and radiation-pressure noise, homodyne output PSD.

All quantities here are SI (rad/s for frequencies) except the dimensionless
position coupling and the output PSD itself, which is in dimensionless
homodyne units with a free overall scale in reduced mode.  PSDs follow the
one-sided convention in angular frequency internally; the CSV interface
converts to ordinary frequency in Hz.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bath import eval_density
from .errors import DomainError, SingularityError, UnphysicalParameterError
from .units import HBAR, KB, OscillatorParams

__all__ = [
    "CavityParams",
    "CavitySteadyState",
    "OutputSpectrum",
    "drive_amplitude",
    "position_coupling",
    "locked_bare_detuning",
    "solve_steady_state",
    "effective_susceptibility",
    "noise_spectra",
    "output_psd",
    "position_psd",
    "output_spectrum_grid",
]


@dataclass(frozen=True)
class CavityParams:
    """Optical cavity and drive parameters.

    kappa is the amplitude decay rate (rad/s), bare_detuning is
    cavity_freq - drive_freq (rad/s), length in m, cavity_freq in rad/s,
    input_power in W, efficiency is the homodyne detection efficiency.
    """

    kappa: float
    bare_detuning: float = 0.0
    length: float = 0.025
    cavity_freq: float = 1.7704e15  # 1064 nm
    input_power: float = 1e-4
    efficiency: float = 1.0

    def __post_init__(self):
        if self.kappa <= 0.0:
            raise DomainError("kappa must be positive")
        if self.length <= 0.0 or self.cavity_freq <= 0.0:
            raise DomainError("cavity length and resonance must be positive")
        if self.input_power < 0.0:
            raise DomainError("input power must be >= 0")
        if not (0.0 < self.efficiency <= 1.0):
            raise DomainError("efficiency must lie in (0, 1]")

    @property
    def mirror_coupling(self) -> float:
        """Frequency pulled per metre of mirror travel, cavity_freq/length."""
        return self.cavity_freq / self.length

    @property
    def drive_freq(self) -> float:
        return self.cavity_freq - self.bare_detuning


@dataclass(frozen=True)
class CavitySteadyState:
    alpha_s: complex
    detuning: float  # effective detuning (rad/s)
    coupling_dimless: float  # mirror_coupling * zero-point length
    drive: float  # |E| used
    multistable: bool = False
    residuals: tuple = (0.0, 0.0)

    @property
    def photon_number(self) -> float:
        return abs(self.alpha_s) ** 2


@dataclass(frozen=True)
class OutputSpectrum:
    omega: np.ndarray  # rad/s
    psd: np.ndarray
    meta: dict = field(default_factory=dict)


def drive_amplitude(power, kappa, omega):
    """|E| = sqrt(2 W kappa / (hbar omega)) for drive power W."""
    if power < 0.0 or kappa <= 0.0 or omega <= 0.0:
        raise DomainError("drive_amplitude needs W >= 0, kappa > 0, omega > 0")
    return math.sqrt(2.0 * power * kappa / (HBAR * omega))


def position_coupling(cavity: CavityParams, osc: OscillatorParams) -> float:
    """Dimensionless-position coupling: mirror_coupling times the zero-point
    length sqrt(hbar / (m Omega))."""
    zp = math.sqrt(HBAR / (osc.mass * osc.omega))
    return cavity.mirror_coupling * zp


def locked_bare_detuning(cavity: CavityParams, coupling_dimless, omega_mech, drive=None):
    """Bare detuning that parks the effective detuning at zero.

    With detuning = 0 the photon number is (|E|/kappa)^2, so the static
    radiation-pressure shift is known in closed form and the lock offset is
    coupling^2 |E|^2 / (kappa^2 omega_mech).
    """
    e = drive if drive is not None else drive_amplitude(
        cavity.input_power, cavity.kappa, cavity.drive_freq
    )
    return coupling_dimless**2 * e**2 / (cavity.kappa**2 * omega_mech)


def solve_steady_state(cavity: CavityParams, coupling_dimless, omega_mech, drive=None):
    """Self-consistent intracavity amplitude and effective detuning.

    The photon number x = |alpha_s|^2 satisfies the real cubic
        g^2 x^3 - 2 d0 g x^2 + (kappa^2 + d0^2) x - E^2 = 0,  g = G^2/Omega.
    All real roots are found; the branch continuously connected to the
    zero-power solution (the smallest positive root) is returned, with
    `multistable` set when three positive roots coexist.
    """
    if omega_mech <= 0.0:
        raise DomainError("mechanical frequency must be positive")
    e = drive if drive is not None else drive_amplitude(
        cavity.input_power, cavity.kappa, cavity.drive_freq
    )
    kap, d0 = cavity.kappa, cavity.bare_detuning
    g = coupling_dimless**2 / omega_mech
    if e == 0.0:
        return CavitySteadyState(0.0 + 0.0j, d0, coupling_dimless, 0.0)
    if g == 0.0:
        det = d0
        alpha = e / (kap + 1j * det)
        return CavitySteadyState(alpha, det, coupling_dimless, e)

    coeffs = [g * g, -2.0 * d0 * g, kap * kap + d0 * d0, -e * e]
    roots = np.roots(coeffs)
    real = roots[np.abs(roots.imag) <= 1e-9 * np.abs(roots) + 1e-300].real
    pos = np.sort(real[real > 0.0])
    if pos.size == 0:
        raise UnphysicalParameterError("steady-state cubic has no positive real root")
    x = float(pos[0])
    # Newton polish on the cubic for the residual contract
    for _ in range(3):
        f = ((g * g * x - 2.0 * d0 * g) * x + kap * kap + d0 * d0) * x - e * e
        df = 3.0 * g * g * x * x - 4.0 * d0 * g * x + kap * kap + d0 * d0
        x -= f / df
    multistable = pos.size == 3 and pos[2] > pos[0] * (1.0 + 1e-9)
    det = d0 - g * x
    alpha = e / (kap + 1j * det)
    r1 = abs(abs(alpha) ** 2 - x) / x
    r2 = abs(det - (d0 - g * abs(alpha) ** 2)) / max(abs(det), kap)
    if max(r1, r2) > 1e-10:
        raise UnphysicalParameterError(
            f"steady-state residuals {r1:.2e}, {r2:.2e} exceed 1e-10"
        )
    return CavitySteadyState(alpha, det, coupling_dimless, e, multistable, (r1, r2))


def effective_susceptibility(omega, omega_mech, gamma_mech, coupling_dimless, alpha_s, detuning, kappa):
    """Mechanical susceptibility including the cavity backaction term.

    chi(w) = Omega / (Omega^2 + i gamma w - w^2
                      - 2 G^2 |a|^2 Delta Omega / (Delta^2 + (kappa + i w)^2))
    """
    omega = np.asarray(omega, dtype=float)
    n = coupling_dimless**2 * abs(alpha_s) ** 2
    cav = detuning**2 + (kappa + 1j * omega) ** 2
    if np.any(np.abs(cav) < 1e-12 * (detuning**2 + kappa**2 + np.abs(omega) ** 2)):
        raise SingularityError("cavity denominator vanishes in chi_eff")
    den = (
        omega_mech**2
        + 1j * gamma_mech * omega
        - omega**2
        - 2.0 * n * detuning * omega_mech / cav
    )
    scale = omega_mech**2 + np.abs(omega) ** 2
    if np.any(np.abs(den) < 1e-12 * scale):
        raise SingularityError("effective susceptibility denominator vanishes")
    return omega_mech / den


def noise_spectra(omega, model, osc: OscillatorParams, temperature, detuning, kappa, coupling_dimless, alpha_s):
    """(S_th, S_rp): thermal force and radiation-pressure noise PSDs driving
    the dimensionless position.  omega > 0, SI rad/s."""
    omega = np.asarray(omega, dtype=float)
    if np.any(omega <= 0.0):
        raise DomainError("noise_spectra needs omega > 0")
    dens = eval_density(model, omega)
    if temperature < 0.0:
        raise DomainError("temperature must be >= 0")
    if temperature == 0.0:
        occ = np.zeros_like(omega)
    else:
        x = HBAR * omega / (2.0 * KB * temperature)
        occ = 1.0 / np.tanh(x) - 1.0
    s_th = math.pi * dens / (osc.mass * osc.omega) * occ
    n = coupling_dimless**2 * abs(alpha_s) ** 2
    s_rp = 2.0 * kappa * n / (detuning**2 + kappa**2 + omega**2 + 2.0 * detuning * omega)
    return s_th, s_rp


def position_psd(omega, model, osc: OscillatorParams, temperature, steady: CavitySteadyState, kappa):
    """|chi_eff|^2 (S_th + S_rp): PSD of the dimensionless position."""
    s_th, s_rp = noise_spectra(
        omega, model, osc, temperature, steady.detuning, kappa,
        steady.coupling_dimless, steady.alpha_s,
    )
    chi = effective_susceptibility(
        omega, osc.omega, osc.gamma, steady.coupling_dimless,
        steady.alpha_s, steady.detuning, kappa,
    )
    return np.abs(chi) ** 2 * (s_th + s_rp)


def output_psd(omega, model, osc: OscillatorParams, cavity: CavityParams = None, steady: CavitySteadyState = None, mode="full", scale=1.0, temperature=None):
    """Homodyne output PSD.

    full mode: (4 zeta G^2 |a|^2 / kappa) |chi_eff|^2 (S_th + S_rp), the
    adiabatic flat transfer of the position PSD onto the phase quadrature.
    reduced mode: scale * I(w) / (w ((Omega^2 - w^2)^2 + (gamma w)^2)), the
    shape the estimator fits, with the overall constant left free.
    """
    omega = np.asarray(omega, dtype=float)
    if np.any(omega <= 0.0):
        raise DomainError("output_psd needs omega > 0")
    if mode == "reduced":
        dens = eval_density(model, omega)
        den = (osc.omega**2 - omega**2) ** 2 + (osc.gamma * omega) ** 2
        return scale * dens / (omega * den)
    if mode != "full":
        raise DomainError("mode must be 'full' or 'reduced'")
    if cavity is None:
        raise DomainError("full mode needs cavity parameters")
    if steady is None:
        g_dimless = position_coupling(cavity, osc)
        steady = solve_steady_state(cavity, g_dimless, osc.omega)
    T = osc.temperature if temperature is None else temperature
    pos = position_psd(omega, model, osc, T, steady, cavity.kappa)
    transfer = 4.0 * cavity.efficiency * steady.coupling_dimless**2 * steady.photon_number / cavity.kappa
    return transfer * pos


def output_spectrum_grid(f_lo_hz, f_hi_hz, n_points, model, osc, cavity=None, mode="full", scale=1.0, steady=None):
    """Evaluate the output PSD on a regular grid of ordinary frequencies."""
    if not (0.0 < f_lo_hz < f_hi_hz) or n_points < 2:
        raise DomainError("need 0 < f_lo < f_hi and at least two grid points")
    f = np.linspace(f_lo_hz, f_hi_hz, int(n_points))
    omega = 2.0 * math.pi * f
    psd = output_psd(omega, model, osc, cavity, steady=steady, mode=mode, scale=scale)
    meta = {
        "mode": mode,
        "oscillator_omega_rad_s": osc.omega,
        "oscillator_quality": osc.quality,
        "temperature_K": osc.temperature,
        "kappa_rad_s": None if cavity is None else cavity.kappa,
        "normalization": "one-sided, ordinary frequency (Hz)",
    }
    return OutputSpectrum(omega=omega, psd=np.asarray(psd), meta=meta)

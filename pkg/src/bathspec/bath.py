"""Bath spectral-density models and their memory kernels.

A bath is described by its spectral density I(omega) >= 0 on omega >= 0
(units mass * frequency^2 in SI, or natural units).  Four variants are
supported, all with bounded support so the damping kernel at zero lag is
finite:

* :class:`OhmicCutoff` -- I = C * omega up to a hard cutoff.
* :class:`LocalPowerLaw` -- I = C * omega^k on a bounded band.
* :class:`PiecewisePowerWindow` -- Ohmic background with a power-law
  corridor of half-width delta around a reference frequency, hard cutoff.
* :class:`TabulatedDensity` -- linear interpolation through measured points.

Derived objects: the damping kernel nu(s) = int_0^inf (I/omega) cos(omega s),
its derivative eta(s) = -int_0^inf I sin(omega s), the one-sided Fourier
transform nu_hat(omega) (real part pi*I/(2*omega), imaginary part a principal
value), the frequency-domain Green's function, and the renormalised squared
frequency K^2 = Omega^2 - 2*nu(0)/m.

Quadrature strategy: every parametric branch that is a pure omega^1 power law
integrates in closed form (sine/cosine integrals), so hard cutoffs far above
the resonance cost nothing; only genuine power-law corridors fall back to the
oscillatory or Cauchy-weighted adaptive rules.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.special import sici

from .errors import (
    DomainError,
    NumericalError,
    SingularityError,
    UnphysicalParameterError,
)
from .quadutil import budget_check, osc_quad, pv_quad, quad_decades, quad_smooth
from .units import HBAR, KB, OscillatorParams

__all__ = [
    "OhmicCutoff",
    "LocalPowerLaw",
    "PiecewisePowerWindow",
    "TabulatedDensity",
    "SpectralDensityModel",
    "WeakCouplingReport",
    "eval_density",
    "eval_density_signed",
    "density_over_omega",
    "nu_kernel",
    "eta_kernel",
    "nu_hat",
    "eta_hat",
    "greens_fourier",
    "k_squared",
    "weak_coupling_report",
    "thermal_force_psd",
    "classical_force_floor",
    "coth",
    "model_to_dict",
    "model_from_dict",
    "rescaled_model",
    "power_branches",
    "support",
]


# ---------------------------------------------------------------------------
# model variants


@dataclass(frozen=True)
class OhmicCutoff:
    """I(omega) = coupling * omega on [0, cutoff), zero beyond."""

    coupling: float
    cutoff: float

    def __post_init__(self):
        if not (self.coupling >= 0.0) or not math.isfinite(self.coupling):
            raise UnphysicalParameterError("coupling must be finite and >= 0")
        if not (self.cutoff > 0.0) or not math.isfinite(self.cutoff):
            raise UnphysicalParameterError("cutoff must be finite and > 0")


@dataclass(frozen=True)
class LocalPowerLaw:
    """I(omega) = scale * omega**exponent on [omega_lo, omega_hi], zero outside."""

    scale: float
    exponent: float
    omega_lo: float
    omega_hi: float

    def __post_init__(self):
        if not (self.scale >= 0.0) or not math.isfinite(self.scale):
            raise UnphysicalParameterError("scale must be finite and >= 0")
        if not math.isfinite(self.exponent):
            raise UnphysicalParameterError("exponent must be finite")
        if not (0.0 <= self.omega_lo < self.omega_hi) or not math.isfinite(self.omega_hi):
            raise UnphysicalParameterError("need 0 <= omega_lo < omega_hi < inf")
        if self.omega_lo == 0.0 and self.exponent <= 0.0:
            # nu(0) = int I/omega would diverge at the origin.
            raise UnphysicalParameterError(
                "exponent must be > 0 when the band touches omega = 0"
            )


@dataclass(frozen=True)
class PiecewisePowerWindow:
    """Ohmic background with an omega**exponent corridor around omega_ref.

    I(omega) = (density_at_ref/omega_ref) * omega            on [0, omega_ref - half_window)
             = (density_at_ref/omega_ref**exponent) * omega**exponent
                                                             on [omega_ref - half_window, omega_ref + half_window)
             = (density_at_ref/omega_ref) * omega            on [omega_ref + half_window, cutoff)
             = 0                                             beyond the cutoff.

    Continuous at omega_ref by construction; the corridor seams carry
    O(half_window * |exponent - 1|) jumps, which is what the two printed
    branch scales imply.
    """

    density_at_ref: float
    omega_ref: float
    exponent: float
    half_window: float
    cutoff: float

    def __post_init__(self):
        if not (self.density_at_ref >= 0.0) or not math.isfinite(self.density_at_ref):
            raise UnphysicalParameterError("density_at_ref must be finite and >= 0")
        if not (self.omega_ref > 0.0):
            raise UnphysicalParameterError("omega_ref must be > 0")
        if not (0.0 < self.half_window < self.omega_ref):
            raise UnphysicalParameterError("need 0 < half_window < omega_ref")
        if not (self.cutoff > self.omega_ref + self.half_window):
            raise UnphysicalParameterError("cutoff must exceed omega_ref + half_window")
        if not math.isfinite(self.exponent):
            raise UnphysicalParameterError("exponent must be finite")


@dataclass(frozen=True)
class TabulatedDensity:
    """Piecewise-linear density through (omega_i, I_i); no extrapolation."""

    omegas: tuple
    densities: tuple

    def __post_init__(self):
        om = np.asarray(self.omegas, dtype=float)
        de = np.asarray(self.densities, dtype=float)
        if om.ndim != 1 or om.size < 2 or om.shape != de.shape:
            raise UnphysicalParameterError("need matching 1-D tables with >= 2 points")
        if not np.all(np.isfinite(om)) or not np.all(np.isfinite(de)):
            raise UnphysicalParameterError("table values must be finite")
        if om[0] < 0.0 or np.any(np.diff(om) <= 0.0):
            raise UnphysicalParameterError("omegas must be nonnegative and strictly increasing")
        if np.any(de < 0.0):
            raise UnphysicalParameterError("densities must be nonnegative")
        if om[0] == 0.0 and de[0] != 0.0:
            raise UnphysicalParameterError("density at omega = 0 must vanish")
        object.__setattr__(self, "omegas", tuple(om))
        object.__setattr__(self, "densities", tuple(de))


SpectralDensityModel = Union[OhmicCutoff, LocalPowerLaw, PiecewisePowerWindow, TabulatedDensity]


# ---------------------------------------------------------------------------
# branch decomposition: ("pow", a, b, scale, p) means I = scale * omega**p,
# ("lin", a, b, slope, intercept) means I = slope * omega + intercept.


def power_branches(model):
    if isinstance(model, OhmicCutoff):
        return [("pow", 0.0, model.cutoff, model.coupling, 1.0)]
    if isinstance(model, LocalPowerLaw):
        return [("pow", model.omega_lo, model.omega_hi, model.scale, model.exponent)]
    if isinstance(model, PiecewisePowerWindow):
        c_bg = model.density_at_ref / model.omega_ref
        c_win = model.density_at_ref / model.omega_ref**model.exponent
        lo = model.omega_ref - model.half_window
        hi = model.omega_ref + model.half_window
        return [
            ("pow", 0.0, lo, c_bg, 1.0),
            ("pow", lo, hi, c_win, model.exponent),
            ("pow", hi, model.cutoff, c_bg, 1.0),
        ]
    if isinstance(model, TabulatedDensity):
        om = np.asarray(model.omegas)
        de = np.asarray(model.densities)
        out = []
        for i in range(om.size - 1):
            a, b = om[i], om[i + 1]
            slope = (de[i + 1] - de[i]) / (b - a)
            out.append(("lin", a, b, slope, de[i] - slope * a))
        return out
    raise TypeError(f"not a spectral density model: {model!r}")


def support(model):
    """(omega_min, omega_max) outside of which the density vanishes."""
    br = power_branches(model)
    return br[0][1], br[-1][2]


def rescaled_model(model, omega_scale, density_scale):
    """Model with frequencies divided by omega_scale, densities by density_scale.

    This is the map into natural units: omega_scale = Omega and
    density_scale = m * Omega^2 make the oscillator's own frequency 1.
    """
    w, d = float(omega_scale), float(density_scale)
    if isinstance(model, OhmicCutoff):
        # I~(x) = I(x*w)/d = coupling*w/d * x
        return OhmicCutoff(coupling=model.coupling * w / d, cutoff=model.cutoff / w)
    if isinstance(model, LocalPowerLaw):
        return LocalPowerLaw(
            scale=model.scale * w**model.exponent / d,
            exponent=model.exponent,
            omega_lo=model.omega_lo / w,
            omega_hi=model.omega_hi / w,
        )
    if isinstance(model, PiecewisePowerWindow):
        return PiecewisePowerWindow(
            density_at_ref=model.density_at_ref / d,
            omega_ref=model.omega_ref / w,
            exponent=model.exponent,
            half_window=model.half_window / w,
            cutoff=model.cutoff / w,
        )
    if isinstance(model, TabulatedDensity):
        return TabulatedDensity(
            omegas=tuple(o / w for o in model.omegas),
            densities=tuple(x / d for x in model.densities),
        )
    raise TypeError(f"not a spectral density model: {model!r}")


# ---------------------------------------------------------------------------
# pointwise evaluation


def eval_density(model, omega):
    """I(omega) for omega >= 0; zero outside the declared support.

    Tabulated models refuse extrapolation: querying outside the table range
    raises :class:`DomainError`.
    """
    om = np.asarray(omega, dtype=float)
    scalar = om.ndim == 0
    om = np.atleast_1d(om)
    if np.any(om < 0.0):
        raise DomainError("eval_density requires omega >= 0; use eval_density_signed")
    if isinstance(model, TabulatedDensity):
        lo, hi = model.omegas[0], model.omegas[-1]
        if np.any(om < lo) or np.any(om > hi):
            raise DomainError(
                f"tabulated density defined on [{lo}, {hi}]; refusing to extrapolate"
            )
        out = np.interp(om, model.omegas, model.densities)
    else:
        out = np.zeros_like(om)
        for _, a, b, c1, c2 in power_branches(model):
            mask = (om >= a) & (om < b)
            if np.any(mask):
                out[mask] = c1 * om[mask] ** c2
    return float(out[0]) if scalar else out


def eval_density_signed(model, omega):
    """Odd extension I(-omega) = -I(omega), for two-sided formulas."""
    om = np.asarray(omega, dtype=float)
    return np.sign(om) * eval_density(model, np.abs(om))


def density_over_omega(model, omega):
    """I(omega)/omega with the omega -> 0 limit taken branch-wise."""
    om = np.asarray(omega, dtype=float)
    scalar = om.ndim == 0
    om = np.atleast_1d(om)
    if np.any(om < 0.0):
        raise DomainError("density_over_omega requires omega >= 0")
    zero = om == 0.0
    if isinstance(model, TabulatedDensity):
        out = eval_density(model, om) / np.where(zero, 1.0, om)
        if np.any(zero):
            a = model.omegas[0]
            # table through the origin: validated to pass through (0, 0)
            out[zero] = model.densities[1] / model.omegas[1] if a == 0.0 else 0.0
    else:
        out = np.zeros_like(om)
        for _, a, b, c1, c2 in power_branches(model):
            mask = (om >= a) & (om < b)
            if not np.any(mask):
                continue
            pos = mask & ~zero
            out[pos] = c1 * om[pos] ** (c2 - 1.0)
            if np.any(mask & zero):
                # branch touching the origin; validation guarantees c2 > 0 here
                if c2 == 1.0:
                    lim = c1
                elif c2 > 1.0:
                    lim = 0.0
                else:
                    lim = math.inf  # sub-Ohmic: I/omega diverges at the origin
                out[mask & zero] = lim
    return float(out[0]) if scalar else out


# ---------------------------------------------------------------------------
# kernels


def _pow_branch_nu(a, b, scale, p, s):
    """integral_a^b scale * omega**(p-1) cos(omega s) domega."""
    if s == 0.0:
        if p == 0.0:
            if a == 0.0:
                raise UnphysicalParameterError("I/omega not integrable at the origin")
            return scale * math.log(b / a), 0.0
        return scale * (b**p - a**p) / p, 0.0
    if p == 1.0:
        return scale * (math.sin(b * s) - math.sin(a * s)) / s, 0.0
    val, err = osc_quad(lambda w: w ** (p - 1.0), a, b, s, "cos")
    return scale * val, scale * err


def _pow_branch_eta(a, b, scale, p, s):
    """integral_a^b scale * omega**p sin(omega s) domega."""
    if s == 0.0:
        return 0.0, 0.0
    if p == 1.0:
        def anti(w):
            return math.sin(w * s) / (s * s) - w * math.cos(w * s) / s

        return scale * (anti(b) - anti(a)), 0.0
    val, err = osc_quad(lambda w: w**p, a, b, s, "sin")
    return scale * val, scale * err


def _lin_branch_nu(a, b, slope, intercept, s):
    if s == 0.0:
        val = slope * (b - a)
        if intercept != 0.0:
            if a == 0.0:
                raise UnphysicalParameterError("I/omega not integrable at the origin")
            val += intercept * math.log(b / a)
        return val, 0.0
    val = slope * (math.sin(b * s) - math.sin(a * s)) / s
    if intercept != 0.0:
        val += intercept * (sici(b * s)[1] - sici(a * s)[1])
    return val, 0.0


def _lin_branch_eta(a, b, slope, intercept, s):
    if s == 0.0:
        return 0.0, 0.0

    def anti(w):
        out = slope * (math.sin(w * s) / (s * s) - w * math.cos(w * s) / s)
        out += intercept * (-math.cos(w * s) / s)
        return out

    return anti(b) - anti(a), 0.0


def nu_kernel(model, s):
    """Damping kernel nu(s) = integral_0^inf (I(omega)/omega) cos(omega s) domega."""
    svals = np.atleast_1d(np.asarray(s, dtype=float))
    if np.any(svals < 0.0):
        raise DomainError("nu_kernel requires s >= 0 (nu is even)")
    out = np.empty_like(svals)
    for i, si_ in enumerate(svals):
        tot = terr = 0.0
        for kind, a, b, c1, c2 in power_branches(model):
            f = _pow_branch_nu if kind == "pow" else _lin_branch_nu
            v, e = f(a, b, c1, c2, si_)
            tot += v
            terr += e
        budget_check(terr, tot if tot != 0.0 else 1.0, 1e-6, "nu_kernel")
        out[i] = tot
    return float(out[0]) if np.ndim(s) == 0 else out


def eta_kernel(model, s):
    """eta(s) = d nu/d s = -integral_0^inf I(omega) sin(omega s) domega."""
    svals = np.atleast_1d(np.asarray(s, dtype=float))
    if np.any(svals < 0.0):
        raise DomainError("eta_kernel requires s >= 0 (eta is odd)")
    out = np.empty_like(svals)
    for i, si_ in enumerate(svals):
        tot = terr = 0.0
        for kind, a, b, c1, c2 in power_branches(model):
            f = _pow_branch_eta if kind == "pow" else _lin_branch_eta
            v, e = f(a, b, c1, c2, si_)
            tot += v
            terr += e
        budget_check(terr, tot if tot != 0.0 else 1.0, 1e-6, "eta_kernel")
        out[i] = -tot
    return float(out[0]) if np.ndim(s) == 0 else out


# ---------------------------------------------------------------------------
# one-sided Fourier transform


def _branch_pv(kind, a, b, c1, c2, w0):
    """integral_a^b (I/omega') / (omega'^2 - w0^2) domega', principal value.

    The pole at omega' = w0 is inside at most one branch; pure omega^1
    branches have the closed form scale/(2 w0) * ln|(w-w0)/(w+w0)|.
    """
    seam_tol = 1e-12 * max(w0, b)
    if min(abs(a - w0), abs(b - w0)) < seam_tol and a < w0 < b * (1 + 1e-12):
        raise SingularityError(f"transform frequency {w0} sits on a branch seam")

    if kind == "pow" and c2 == 1.0:
        def anti(w):
            return math.log(abs((w - w0) / (w + w0)))

        return c1 / (2.0 * w0) * (anti(b) - anti(a)), 0.0

    if kind == "pow":
        def dens_over(w):
            return c1 * w ** (c2 - 1.0)
    else:
        def dens_over(w):
            return c1 + c2 / w

    if a < w0 < b:
        val, err = pv_quad(lambda w: dens_over(w) / (w + w0), a, b, w0)
        return val, err
    f = lambda w: dens_over(w) / (w * w - w0 * w0)
    if a > 0 and b / max(a, 1e-300) > 1e3 and w0 < a:
        return quad_decades(f, a, b)
    return quad_smooth(f, a, b)


def nu_hat(model, omega):
    """One-sided transform nu_hat(omega) = integral_0^inf nu(s) e^{-i omega s} ds.

    Evaluated in the frequency domain: the real part is pi*I(omega)/(2*omega)
    exactly, the imaginary part is
    omega * PV integral_0^inf I(w)/(w*(w^2 - omega^2)) dw.
    """
    wvals = np.atleast_1d(np.asarray(omega, dtype=float))
    if np.any(wvals <= 0.0):
        raise DomainError("nu_hat requires omega > 0")
    out = np.empty(wvals.shape, dtype=complex)
    for i, w0 in enumerate(wvals):
        re = math.pi * _density_no_extrap(model, w0) / (2.0 * w0)
        imacc = imerr = 0.0
        for kind, a, b, c1, c2 in power_branches(model):
            v, e = _branch_pv(kind, a, b, c1, c2, w0)
            imacc += v
            imerr += e
        budget_check(imerr, imacc if imacc != 0.0 else 1.0, 1e-6, "nu_hat")
        out[i] = complex(re, w0 * imacc)
    return complex(out[0]) if np.ndim(omega) == 0 else out


def _density_no_extrap(model, w0):
    """Density for transform use: zero outside a tabulated range, no error."""
    if isinstance(model, TabulatedDensity):
        if w0 < model.omegas[0] or w0 > model.omegas[-1]:
            return 0.0
    return eval_density(model, w0)


def eta_hat(model, omega):
    """One-sided transform of eta: i*omega*nu_hat(omega) - nu(0)."""
    nu0 = nu_kernel(model, 0.0)
    return 1j * np.asarray(omega, dtype=float) * nu_hat(model, omega) - nu0


def k_squared(model, osc: OscillatorParams):
    """Renormalised squared frequency K^2 = Omega^2 - (2/m) nu(0).

    The sign is reported, not judged; downstream operations that require a
    real resonance raise on K^2 <= 0.
    """
    return osc.omega**2 - 2.0 * nu_kernel(model, 0.0) / osc.mass


def greens_fourier(model, osc: OscillatorParams, omega):
    """G(omega) = 1 / (-omega^2 + 2*eta_hat(omega)/m + Omega^2)."""
    wvals = np.atleast_1d(np.asarray(omega, dtype=float))
    nu0 = nu_kernel(model, 0.0)
    out = np.empty(wvals.shape, dtype=complex)
    for i, w in enumerate(wvals):
        if w == 0.0:
            eh = -nu0 + 0j
        else:
            eh = 1j * w * nu_hat(model, w) - nu0
        denom = -w * w + 2.0 * eh / osc.mass + osc.omega**2
        scale = max(w * w, osc.omega**2, abs(2.0 * nu0 / osc.mass))
        if abs(denom) < 1e-12 * scale:
            raise SingularityError(
                f"response diverges at omega = {w}: |denominator| = {abs(denom):.3e}"
            )
        out[i] = 1.0 / denom
    return complex(out[0]) if np.ndim(omega) == 0 else out


@dataclass(frozen=True)
class WeakCouplingReport:
    k_squared: float
    k_frequency: float
    derivative_ratio: float
    magnitude_ratio: float
    threshold: float
    passed: bool


def weak_coupling_report(model, osc: OscillatorParams, threshold=0.01):
    """Check the two smallness conditions behind the weak-coupling forms.

    Both ratios are evaluated at the renormalised frequency K:
    |(2/m) d(nu_hat)/d omega| and |nu_hat(K)/m| / K.  K^2 <= 0 means the
    bare model has no real renormalised resonance and is rejected.
    """
    k2 = k_squared(model, osc)
    if not k2 > 0.0:
        raise UnphysicalParameterError(
            f"K^2 = {k2:.6e} <= 0: cutoff-dominated frequency shift leaves no "
            "real renormalised resonance"
        )
    kf = math.sqrt(k2)
    h = 1e-5 * kf
    d_nu = (nu_hat(model, kf + h) - nu_hat(model, kf - h)) / (2.0 * h)
    r1 = abs(2.0 * d_nu / osc.mass)
    r2 = abs(nu_hat(model, kf) / osc.mass) / kf
    return WeakCouplingReport(
        k_squared=k2,
        k_frequency=kf,
        derivative_ratio=r1,
        magnitude_ratio=r2,
        threshold=threshold,
        passed=bool(r1 < threshold and r2 < threshold),
    )


# ---------------------------------------------------------------------------
# thermal force spectrum


def coth(x):
    """coth(x) with the small-argument series guarding roundoff."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-6
    safe = np.where(small, 1.0, x)
    out = np.where(small, 1.0 / np.where(x == 0.0, np.inf, x) + x / 3.0, 1.0 / np.tanh(safe))
    if np.ndim(x) == 0:
        return float(out)
    return out


def thermal_force_psd(model, temperature, omega, mode="quantum", hbar=HBAR, kb=KB):
    """Force spectrum (hbar/2) * I(omega) * (coth(hbar omega / 2 kB T) - 1).

    mode="high_T" replaces coth by its classical limit 2 kB T/(hbar omega).
    Pass hbar=kb=1 to work in natural units.
    """
    om = np.asarray(omega, dtype=float)
    if np.any(om <= 0.0):
        raise DomainError("thermal_force_psd requires omega > 0")
    dens = eval_density(model, om)
    if mode == "quantum":
        if temperature == 0.0:
            fac = 0.0 * om
        else:
            fac = coth(hbar * om / (2.0 * kb * temperature)) - 1.0
    elif mode == "high_T":
        fac = 2.0 * kb * temperature / (hbar * om) - 1.0
    else:
        raise DomainError(f"unknown mode {mode!r}; use 'quantum' or 'high_T'")
    return (hbar / 2.0) * dens * fac


def classical_force_floor(model, temperature, omega, kb=KB):
    """Leading high-temperature term kB * T * I(omega)/omega."""
    om = np.asarray(omega, dtype=float)
    if np.any(om < 0.0):
        raise DomainError("classical_force_floor requires omega >= 0")
    return kb * temperature * density_over_omega(model, om)


# ---------------------------------------------------------------------------
# serialization


_VARIANTS = {
    "ohmic_cutoff": (OhmicCutoff, ("coupling", "cutoff")),
    "local_power_law": (LocalPowerLaw, ("scale", "exponent", "omega_lo", "omega_hi")),
    "piecewise_power_window": (
        PiecewisePowerWindow,
        ("density_at_ref", "omega_ref", "exponent", "half_window", "cutoff"),
    ),
    "tabulated": (TabulatedDensity, ("omegas", "densities")),
}


def model_to_dict(model):
    for name, (cls, fields) in _VARIANTS.items():
        if isinstance(model, cls):
            out = {"variant": name}
            for f in fields:
                v = getattr(model, f)
                out[f] = list(v) if isinstance(v, tuple) else v
            return out
    raise TypeError(f"not a spectral density model: {model!r}")


def model_from_dict(d):
    if not isinstance(d, dict) or "variant" not in d:
        raise DomainError("model dict must carry a 'variant' key")
    name = d["variant"]
    if name not in _VARIANTS:
        raise DomainError(
            f"unknown density variant {name!r}; expected one of {sorted(_VARIANTS)}"
        )
    cls, fields = _VARIANTS[name]
    extra = set(d) - set(fields) - {"variant"}
    if extra:
        raise DomainError(f"unknown keys for {name}: {sorted(extra)}")
    missing = set(fields) - set(d)
    if missing:
        raise DomainError(f"missing keys for {name}: {sorted(missing)}")
    kwargs = {}
    for f in fields:
        v = d[f]
        kwargs[f] = tuple(v) if isinstance(v, (list, tuple)) else float(v)
    return cls(**kwargs)

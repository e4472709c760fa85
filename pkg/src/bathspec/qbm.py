"""Weak-coupling master-equation coefficients and the non-Markovianity measure.

Everything here works in natural units: hbar = k_B = 1, the oscillator mass
and frequency are scaled to 1, times are in 1/Omega, and temperature enters
as theta = k_B T / (hbar Omega).  Public entry points accept SI models and
:class:`~bathspec.units.OscillatorParams` and nondimensionalise on the way in.

The four time-dependent coefficients of the quadratic-coupling master
equation are one-dimensional frequency integrals once the time integral is
done first (Fubini):

    damping(t)            = (1/2) * [S-(t) - S+(t)]          with B = I~
    freq_shift(t)         = -[C-(t) + C+(t)]                 with B = I~
    momentum_diffusion(t) = (1/2) * [S-(t) + S+(t)]          with B = I~ coth
    cross_diffusion(t)    = (1/2) * [C+(t) - C-(t)]          with B = I~ coth

where S-+(t) = int B(w) sin((w -+ 1) t)/(w -+ 1) dw and C-+ carry the
(1 - cos((w -+ 1) t))/(w -+ 1) kernels.  The resonance at w = 1 is removed by pole
subtraction (exact Si / Cin closed forms for the subtracted piece); pure
omega^1 branches without a thermal factor integrate fully in closed form, so
hard cutoffs of 1e7 * Omega are handled exactly rather than by brute force.

t -> infinity limits: damping -> (pi/2) I~(1), momentum diffusion ->
(pi/2) I~(1) coth(1/(2 theta)), the frequency shift becomes a principal
value, and the cross diffusion splits into a resonant window plus an
off-resonant principal-value remainder, mirroring how the asymptotics are
usually quoted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .bath import power_branches, rescaled_model
from .errors import DomainError, NumericalError, SingularityError
from .quadutil import (
    budget_check,
    cin,
    osc_quad_shifted,
    pv_quad,
    quad_decades,
    quad_smooth,
    si,
)
from .units import HBAR, KB, OscillatorParams

__all__ = [
    "MasterEquationCoefficients",
    "AsymptoticCoefficients",
    "WindowLimitTerms",
    "NonMarkovReport",
    "ExponentBound",
    "CovarianceTrajectory",
    "coefficients_at",
    "asymptotic_coefficients",
    "resonant_window_limit",
    "cross_diffusion_resonant_at",
    "nonmarkovianity_measure",
    "measure_from_ratio",
    "bound_from_exponent",
    "generator_consistency",
    "canonical_quadratic_form",
    "propagate_covariance",
    "drift_matrix",
    "diffusion_matrix",
]


# ---------------------------------------------------------------------------
# result containers


@dataclass(frozen=True)
class MasterEquationCoefficients:
    """Coefficient quadruple at one time, natural units."""

    time: float
    damping: float
    freq_shift: float
    momentum_diffusion: float
    cross_diffusion: float


@dataclass(frozen=True)
class AsymptoticCoefficients:
    damping: float
    freq_shift: float
    momentum_diffusion: float
    cross_diffusion: float
    cross_diffusion_resonant: float
    cross_diffusion_offresonant: float
    half_window: float
    theta: float

    def as_coefficients(self) -> MasterEquationCoefficients:
        return MasterEquationCoefficients(
            time=math.inf,
            damping=self.damping,
            freq_shift=self.freq_shift,
            momentum_diffusion=self.momentum_diffusion,
            cross_diffusion=self.cross_diffusion,
        )


@dataclass(frozen=True)
class WindowLimitTerms:
    """High-temperature closed form of the resonant window contribution."""

    slope_term: float  # proportional to (1 - exponent)
    offset_term: float  # exponent-independent
    total: float


@dataclass(frozen=True)
class NonMarkovReport:
    matrix: np.ndarray  # 2x2 Hermitian coefficient matrix
    lambda_min: float
    norm: float
    value: float  # clipped measure in [0, 1)
    ratio: float  # (cross^2 + damping^2) / (mass^2 * momentum^2)


@dataclass(frozen=True)
class ExponentBound:
    ratio_bound: float
    measure_bound: float


@dataclass(frozen=True)
class CovarianceTrajectory:
    times: np.ndarray
    matrices: np.ndarray  # (n, 2, 2)
    table_times: np.ndarray
    table_coefficients: np.ndarray  # (m, 4): damping, freq_shift, mom_diff, cross_diff


# ---------------------------------------------------------------------------
# nondimensionalisation


def _nondim(model, osc: OscillatorParams, temperature=None):
    nd = rescaled_model(model, osc.omega, osc.mass * osc.omega**2)
    T = osc.temperature if temperature is None else temperature
    if T < 0.0:
        raise DomainError("temperature must be >= 0")
    theta = KB * T / (HBAR * osc.omega)
    return nd, theta


def _coth_half(w, theta):
    """coth(w / (2 theta)), series-guarded; theta = 0 means the T = 0 value 1."""
    if theta == 0.0:
        return 1.0
    x = w / (2.0 * theta)
    if abs(x) < 1e-6:
        return 1.0 / x + x / 3.0
    return 1.0 / math.tanh(x)


def _branch_envelope(c1, c2, kind, theta, thermal):
    """B(w) on one branch: I~(w) (optionally * coth(w / 2 theta)).

    Thermal envelopes clamp w away from 0 so quadrature nodes landing on the
    endpoint form the finite product limit instead of 0 * inf.
    """
    if kind == "pow":
        if thermal:
            def env(w):
                w = w if w > 1e-12 else 1e-12
                return c1 * w**c2 * _coth_half(w, theta)
        else:
            def env(w):
                return c1 * w**c2
    else:
        if thermal:
            def env(w):
                w = w if w > 1e-12 else 1e-12
                return (c1 * w + c2) * _coth_half(w, theta)
        else:
            def env(w):
                return c1 * w + c2
    return env


def _plain(f, a, b, **kw):
    """Adaptive quadrature of a smooth envelope over possibly many decades."""
    if a == b:
        return 0.0, 0.0
    if a > 0.0 and b / a > 1e3:
        return quad_decades(f, a, b, **kw)
    if b > 10.0 * max(a, 1.0) and b > 100.0:
        v1, e1 = quad_smooth(f, a, 10.0 * max(a, 1.0), **kw)
        v2, e2 = quad_decades(f, 10.0 * max(a, 1.0), b, **kw)
        return v1 + v2, e1 + e2
    return quad_smooth(f, a, b, **kw)


_POLE_TOL = 1e-9


def _split_pole_branch(branches):
    """Index of the branch holding w = 1 strictly inside, or None.

    A seam or support edge numerically on the resonance makes the per-branch
    closed forms and principal values ill-defined, so that case is rejected.
    """
    for _, a, b, _, _ in branches:
        if abs(a - 1.0) < _POLE_TOL or abs(b - 1.0) < _POLE_TOL:
            raise SingularityError(
                "a branch seam sits numerically on the resonance; shift the seam"
            )
    for i, (_, a, b, _, _) in enumerate(branches):
        if a < 1.0 < b:
            return i
    return None


def _env_at_one(branches, pole_idx, theta, thermal):
    if pole_idx is None:
        return 0.0, 0.0
    kind, _, _, c1, c2 = branches[pole_idx]
    env = _branch_envelope(c1, c2, kind, theta, thermal)
    b1 = env(1.0)
    h = 1e-6
    db1 = (env(1.0 + h) - env(1.0 - h)) / (2.0 * h)
    return b1, db1


def _subtracted(env, b1, db1):
    def r(w):
        d = w - 1.0
        if abs(d) < 1e-7:
            return db1
        return (env(w) - b1) / d

    return r


# ---------------------------------------------------------------------------
# finite-time coefficients


def coefficients_at(model, osc: OscillatorParams, t, temperature=None):
    """Master-equation coefficient quadruple at dimensionless time t.

    t is measured in 1/Omega.  Returns natural-unit values.
    """
    if t < 0.0:
        raise DomainError("coefficients_at requires t >= 0")
    nd, theta = _nondim(model, osc, temperature)
    if t == 0.0:
        return MasterEquationCoefficients(0.0, 0.0, 0.0, 0.0, 0.0)
    branches = power_branches(nd)
    pole_idx = _split_pole_branch(branches)

    s_minus, s_plus = _s_integrals(branches, pole_idx, 0.0, t, thermal=False)
    c_minus, c_plus = _c_integrals(branches, pole_idx, 0.0, t, thermal=False)
    s_minus_th, s_plus_th = _s_integrals(branches, pole_idx, theta, t, thermal=True)
    dxp = _cross_diffusion_at(branches, pole_idx, theta, t)

    return MasterEquationCoefficients(
        time=t,
        damping=0.5 * (s_minus - s_plus),
        freq_shift=-(c_minus + c_plus),
        momentum_diffusion=0.5 * (s_minus_th + s_plus_th),
        cross_diffusion=dxp,
    )


def _s_integrals(branches, pole_idx, theta, t, thermal):
    """S-(t) and S+(t) summed over branches with envelope B."""
    sm = sp = err = 0.0
    for i, (kind, a, b, c1, c2) in enumerate(branches):
        if kind == "pow" and c2 == 1.0 and not thermal:
            sm += _ohmic_s_minus(a, b, c1, t)
            sp += _ohmic_s_plus(a, b, c1, t)
            continue
        env = _branch_envelope(c1, c2, kind, theta, thermal)
        if i == pole_idx:
            b1, db1 = _env_at_one(branches, pole_idx, theta, thermal)
            sm += b1 * (si((b - 1.0) * t) - si((a - 1.0) * t))
            v, e = osc_quad_shifted(_subtracted(env, b1, db1), a, b, t, 1.0, "sin")
            sm += v
            err += e
        else:
            v, e = osc_quad_shifted(lambda w: env(w) / (w - 1.0), a, b, t, 1.0, "sin")
            sm += v
            err += e
        v, e = osc_quad_shifted(lambda w: env(w) / (w + 1.0), a, b, t, -1.0, "sin")
        sp += v
        err += e
    budget_check(err, max(abs(sm), abs(sp), 1e-30), 1e-3, "coefficient S integrals")
    return sm, sp


def _c_integrals(branches, pole_idx, theta, t, thermal):
    """C-(t) and C+(t) summed over branches with envelope B."""
    cm = cp = err = 0.0
    for i, (kind, a, b, c1, c2) in enumerate(branches):
        if kind == "pow" and c2 == 1.0 and not thermal:
            cm += _ohmic_c(a, b, c1, t, -1.0)
            cp += _ohmic_c(a, b, c1, t, +1.0)
            continue
        env = _branch_envelope(c1, c2, kind, theta, thermal)
        if i == pole_idx:
            b1, db1 = _env_at_one(branches, pole_idx, theta, thermal)
            r = _subtracted(env, b1, db1)
            cm += b1 * (cin((b - 1.0) * t) - cin((a - 1.0) * t))
            v, e = quad_smooth(r, a, b)
            cm += v
            err += e
            v, e = osc_quad_shifted(r, a, b, t, 1.0, "cos")
            cm -= v
            err += e
        else:
            f = lambda w: env(w) / (w - 1.0)
            v, e = _plain(f, a, b)
            cm += v
            err += e
            v, e = osc_quad_shifted(f, a, b, t, 1.0, "cos")
            cm -= v
            err += e
        g = lambda w: env(w) / (w + 1.0)
        v, e = _plain(g, a, b)
        cp += v
        err += e
        v, e = osc_quad_shifted(g, a, b, t, -1.0, "cos")
        cp -= v
        err += e
    budget_check(err, max(abs(cm), abs(cp), 1e-30), 1e-3, "coefficient C integrals")
    return cm, cp


def _cross_diffusion_at(branches, pole_idx, theta, t):
    """(1/2) [C+ - C-] with B = I~ coth, grouped so the large plain parts of
    C+ and C- combine into a single well-scaled integrand before quadrature."""
    total = err = 0.0
    for i, (kind, a, b, c1, c2) in enumerate(branches):
        env = _branch_envelope(c1, c2, kind, theta, thermal=True)
        if i == pole_idx:
            b1, db1 = _env_at_one(branches, pole_idx, theta, thermal=True)
            r = _subtracted(env, b1, db1)
            v, e = quad_smooth(lambda w: env(w) / (w + 1.0) - r(w), a, b)
            total += 0.5 * v
            err += e
            total -= 0.5 * b1 * (cin((b - 1.0) * t) - cin((a - 1.0) * t))
            v, e = osc_quad_shifted(r, a, b, t, 1.0, "cos")
            total += 0.5 * v
            err += e
        else:
            v, e = _plain(lambda w: -env(w) / (w * w - 1.0), a, b)
            total += v
            err += e
            v, e = osc_quad_shifted(lambda w: env(w) / (w - 1.0), a, b, t, 1.0, "cos")
            total += 0.5 * v
            err += e
        v, e = osc_quad_shifted(lambda w: env(w) / (w + 1.0), a, b, t, -1.0, "cos")
        total -= 0.5 * v
        err += e
    budget_check(err, max(abs(total), 1e-30), 1e-2, "cross-diffusion integrals")
    return total


# closed forms for omega^1 branches without a thermal factor ---------------


def _ohmic_s_minus(a, b, c, t):
    """int_a^b c w sin((w-1)t)/(w-1) dw = c[-cos(ut)/t + Si(ut)], u = w - 1."""

    def anti(u):
        return -math.cos(u * t) / t + si(u * t)

    return c * (anti(b - 1.0) - anti(a - 1.0))


def _ohmic_s_plus(a, b, c, t):
    """int_a^b c w sin((w+1)t)/(w+1) dw = c[-cos(vt)/t - Si(vt)], v = w + 1."""

    def anti(v):
        return -math.cos(v * t) / t - si(v * t)

    return c * (anti(b + 1.0) - anti(a + 1.0))


def _ohmic_c(a, b, c, t, sign):
    """int_a^b c w (1-cos((w + sign)t))/(w + sign) dw with sign = -+1.

    sign = -1 : kernel (1 - cos((w-1)t))/(w-1); u = w-1; integrand (u+1)(...)/u
                -> antiderivative [u - sin(ut)/t] + Cin(ut)
    sign = +1 : kernel (1 - cos((w+1)t))/(w+1); v = w+1; integrand (v-1)(...)/v
                -> antiderivative [v - sin(vt)/t] - Cin(vt)
    """
    if sign < 0:
        lo, hi = a - 1.0, b - 1.0
        f = lambda u: u - math.sin(u * t) / t + cin(u * t)
    else:
        lo, hi = a + 1.0, b + 1.0
        f = lambda v: v - math.sin(v * t) / t - cin(v * t)
    return c * (f(hi) - f(lo))


# ---------------------------------------------------------------------------
# asymptotics


def asymptotic_coefficients(model, osc: OscillatorParams, temperature=None, half_window=0.03):
    """t -> infinity coefficients with the cross diffusion split into the
    resonant window [1 - half_window, 1 + half_window] and its complement."""
    if not (0.0 < half_window < 1.0):
        raise DomainError("half_window must lie in (0, 1) in units of Omega")
    nd, theta = _nondim(model, osc, temperature)
    branches = power_branches(nd)
    _split_pole_branch(branches)  # reject seams sitting on the resonance
    dens1 = _density_at(branches, 1.0)
    lo, hi = branches[0][1], branches[-1][2]
    if not (lo <= 1.0 - half_window and 1.0 + half_window <= hi):
        raise DomainError("resonant window must lie inside the model support")

    gamma_inf = 0.5 * math.pi * dens1
    dpp_inf = gamma_inf * _coth_half(1.0, theta)
    shift = _freq_shift_inf(branches)
    dxp_res = _dxp_resonant_pv(branches, theta, half_window)
    dxp_off = _dxp_offresonant(branches, theta, half_window)
    return AsymptoticCoefficients(
        damping=gamma_inf,
        freq_shift=shift,
        momentum_diffusion=dpp_inf,
        cross_diffusion=dxp_res + dxp_off,
        cross_diffusion_resonant=dxp_res,
        cross_diffusion_offresonant=dxp_off,
        half_window=half_window,
        theta=theta,
    )


def _density_at(branches, w0):
    for kind, a, b, c1, c2 in branches:
        if a <= w0 < b:
            return c1 * w0**c2 if kind == "pow" else c1 * w0 + c2
    return 0.0


def _freq_shift_inf(branches):
    """-PV int I~(w) * 2w / (w^2 - 1) dw."""
    total = err = 0.0
    for kind, a, b, c1, c2 in branches:
        if kind == "pow" and c2 == 1.0:
            # int 2 c w^2/(w^2-1) dw = c [2w + ln|(w-1)/(w+1)|], PV-valid
            def anti(w):
                return 2.0 * w + math.log(abs((w - 1.0) / (w + 1.0)))

            total += c1 * (anti(b) - anti(a))
            continue
        env = _branch_envelope(c1, c2, kind, 0.0, thermal=False)
        if a < 1.0 < b:
            v, e = pv_quad(lambda w: env(w) * 2.0 * w / (w + 1.0), a, b, 1.0)
        else:
            v, e = _plain(lambda w: env(w) * 2.0 * w / (w * w - 1.0), a, b)
        total += v
        err += e
    budget_check(err, max(abs(total), 1e-30), 1e-6, "frequency-shift asymptote")
    return -total


def _intersect(branches, lo, hi):
    """Branch pieces clipped to [lo, hi]."""
    out = []
    for kind, a, b, c1, c2 in branches:
        aa, bb = max(a, lo), min(b, hi)
        if aa < bb:
            out.append((kind, aa, bb, c1, c2))
    return out


def _dxp_resonant_pv(branches, theta, delta):
    """(1/2)[ int_win B/(1+w) dw - PV int_win B/(w-1) dw ], B = I~ coth."""
    total = err = 0.0
    for kind, a, b, c1, c2 in _intersect(branches, 1.0 - delta, 1.0 + delta):
        env = _branch_envelope(c1, c2, kind, theta, thermal=True)
        v, e = quad_smooth(lambda w: env(w) / (1.0 + w), a, b)
        total += 0.5 * v
        err += e
        if a < 1.0 < b:
            v, e = pv_quad(env, a, b, 1.0)
        else:
            v, e = quad_smooth(lambda w: env(w) / (w - 1.0), a, b)
        total -= 0.5 * v
        err += e
    budget_check(err, max(abs(total), 1e-30), 1e-5, "resonant cross-diffusion")
    return total


def _dxp_offresonant(branches, theta, delta):
    """int over support minus window of I~ coth / (1 - w^2) dw."""
    total = err = 0.0
    lo, hi = branches[0][1], branches[-1][2]
    pieces = _intersect(branches, lo, 1.0 - delta) + _intersect(branches, 1.0 + delta, hi)
    for kind, a, b, c1, c2 in pieces:
        env = _branch_envelope(c1, c2, kind, theta, thermal=True)
        v, e = _plain(lambda w: env(w) / (1.0 - w * w), a, b, epsrel=1e-12)
        total += v
        err += e
    budget_check(err, max(abs(total), 1e-30), 1e-4, "off-resonant cross-diffusion")
    return total


def cross_diffusion_resonant_at(model, osc: OscillatorParams, t, half_window=0.03, temperature=None):
    """Finite-time resonant window piece of the cross diffusion.

    Same window as :func:`asymptotic_coefficients` so convergence of the
    resonant part can be tracked on its own.
    """
    nd, theta = _nondim(model, osc, temperature)
    branches = _intersect(power_branches(nd), 1.0 - half_window, 1.0 + half_window)
    pole_idx = _split_pole_branch(branches)
    return _cross_diffusion_at(branches, pole_idx, theta, t)


def resonant_window_limit(density_at_ref, omega_ref, exponent, half_window, theta):
    """High-temperature closed form of the resonant window contribution.

    Valid for half_window << omega_ref and theta >> 1; the affine window
    approximation carries a relative error of order (half_window/omega_ref)^2.
    Natural units (hbar = k_B = 1); theta is k_B T/(hbar omega_ref).
    """
    if not (0.0 < half_window < omega_ref):
        raise DomainError("need 0 < half_window < omega_ref")
    if theta <= 0.0:
        raise DomainError("closed form needs theta > 0 (high temperature)")
    pref = density_at_ref * theta / omega_ref
    lo = omega_ref - half_window
    hi = omega_ref + half_window
    slope = pref * (1.0 - exponent) * math.log(hi / lo)
    offset = pref * math.log(
        (omega_ref - half_window / 2.0) * hi / ((omega_ref + half_window / 2.0) * lo)
    )
    return WindowLimitTerms(slope_term=slope, offset_term=offset, total=slope + offset)


# ---------------------------------------------------------------------------
# non-Markovianity measure


def nonmarkovianity_measure(coeffs, mass=1.0):
    """Spectral measure of the coefficient matrix's negative eigenvalue.

    The 2x2 Hermitian matrix [[2 M Dpp, Dxp + i gamma], [Dxp - i gamma, 0]]
    has lambda_min <= 0 whenever the off-diagonal entry is nonzero; the
    measure is -lambda_min / ||matrix||, clipped at zero, which equals
    (sqrt(1 + ratio) - 1)/(sqrt(1 + ratio) + 1) for
    ratio = (Dxp^2 + gamma^2)/(M Dpp)^2.
    """
    dpp = coeffs.momentum_diffusion
    dxp = coeffs.cross_diffusion
    gam = coeffs.damping
    if not dpp > 0.0:
        raise DomainError("momentum diffusion must be positive for the measure")
    d = 2.0 * mass * dpp
    z2 = dxp * dxp + gam * gam
    disc = math.sqrt(d * d + 4.0 * z2)
    lam_min = 0.5 * (d - disc)
    lam_max = 0.5 * (d + disc)
    norm = max(abs(lam_min), abs(lam_max))
    value = max(0.0, -lam_min) / norm
    mat = np.array([[d, dxp + 1j * gam], [dxp - 1j * gam, 0.0]], dtype=complex)
    return NonMarkovReport(
        matrix=mat,
        lambda_min=lam_min,
        norm=norm,
        value=value,
        ratio=z2 / (mass * dpp) ** 2,
    )


def measure_from_ratio(ratio):
    """Closed form (sqrt(1 + r) - 1)/(sqrt(1 + r) + 1), stable for small r."""
    if ratio < 0.0:
        raise DomainError("ratio must be >= 0")
    s = math.sqrt(1.0 + ratio)
    # (s-1)/(s+1) = r / (s+1)^2 avoids cancellation for tiny r
    return ratio / (s + 1.0) ** 2


def bound_from_exponent(exponent, omega_ref, half_window):
    """Printed lower bound (4/pi^2)(1-k)^2 ln^2((O+d)/(O-d)) and its measure.

    Direct asymptotics of the same ratio give a constant 4x smaller; both
    routes are exercised by the test suite and the discrepancy is documented
    rather than reconciled.
    """
    if not (0.0 < half_window < omega_ref):
        raise DomainError("need 0 < half_window < omega_ref")
    L = math.log((omega_ref + half_window) / (omega_ref - half_window))
    mu = (4.0 / math.pi**2) * (1.0 - exponent) ** 2 * L * L
    return ExponentBound(ratio_bound=mu, measure_bound=measure_from_ratio(mu))


# ---------------------------------------------------------------------------
# generator consistency and covariance propagation


def drift_matrix(coeffs, mass=1.0, bare_omega_sq=1.0):
    """h = [[0, -1/M], [M (Omega^2 + shift), 2 gamma]] in natural units."""
    om2 = bare_omega_sq + coeffs.freq_shift
    return np.array([[0.0, -1.0 / mass], [mass * om2, 2.0 * coeffs.damping]])


def diffusion_matrix(coeffs, mass=1.0):
    """D = [[0, -Dxp], [-Dxp, 2 M Dpp]]."""
    return np.array(
        [
            [0.0, -coeffs.cross_diffusion],
            [-coeffs.cross_diffusion, 2.0 * mass * coeffs.momentum_diffusion],
        ]
    )


def canonical_quadratic_form(coeffs, mass=1.0, bare_omega_sq=1.0):
    """Symmetric quadratic form of the renormalised Hamiltonian part,
    [[M (Omega^2+shift)/2, gamma/2], [gamma/2, 1/(2M)]]."""
    om2 = bare_omega_sq + coeffs.freq_shift
    g = coeffs.damping
    return np.array([[0.5 * mass * om2, 0.5 * g], [0.5 * g, 0.5 / mass]])


_SYMPLECTIC = np.array([[0.0, 1.0], [-1.0, 0.0]])


def generator_consistency(coeffs, quad_form=None, mass=1.0, bare_omega_sq=1.0):
    """Residual of the algebraic identities tying the coefficient matrix to
    the drift and diffusion matrices:

        h^T = (2 h_R - Im(m)) sigma      and      D = sigma^T Re(m) sigma

    with sigma the 2x2 symplectic form and m the Hermitian coefficient
    matrix.  Returns the max-abs residual; zero (to roundoff) for the
    canonical quadratic form.
    """
    if quad_form is None:
        quad_form = canonical_quadratic_form(coeffs, mass, bare_omega_sq)
    report = nonmarkovianity_measure(coeffs, mass)
    m = report.matrix
    h = drift_matrix(coeffs, mass, bare_omega_sq)
    d = diffusion_matrix(coeffs, mass)
    ht_rebuilt = (2.0 * quad_form - m.imag) @ _SYMPLECTIC
    d_rebuilt = _SYMPLECTIC.T @ m.real @ _SYMPLECTIC
    r1 = np.max(np.abs(ht_rebuilt - h.T))
    r2 = np.max(np.abs(d_rebuilt - d))
    return float(max(r1, r2))


def propagate_covariance(
    model,
    osc: OscillatorParams,
    gamma0,
    times,
    temperature=None,
    coefficient_source="table",
    settle_time=None,
    table_points=257,
    rtol=1e-9,
    half_window=0.03,
):
    """Integrate dG/dt = -h G - G h^T + D from G(0) = gamma0.

    times are in 1/Omega; gamma0 is the symmetrised covariance matrix in
    natural units, [[<x^2>, <xp>_s], [<xp>_s, <p^2>]], so an admissible
    state has det >= 1/4 (vacuum saturates it).  At the fixed point
    <p^2> = Dpp/(2 gamma), which is theta at high temperature
    (equipartition).  coefficient_source "table" evaluates the
    time-dependent coefficients on a dense grid and interpolates, switching
    to the asymptotic values after the settle time; "asymptotic" freezes
    them at their long-time values throughout.
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size < 1 or np.any(np.diff(times) <= 0.0):
        raise DomainError("times must be a strictly increasing 1-D grid")
    if times[0] < 0.0:
        raise DomainError("times must be nonnegative")
    g0 = np.asarray(gamma0, dtype=float)
    if g0.shape != (2, 2) or abs(g0[0, 1] - g0[1, 0]) > 1e-12 * (1.0 + np.abs(g0).max()):
        raise DomainError("gamma0 must be a symmetric 2x2 matrix")
    det0 = g0[0, 0] * g0[1, 1] - g0[0, 1] * g0[1, 0]
    if g0[0, 0] <= 0.0 or g0[1, 1] <= 0.0 or det0 < 0.25 - 1e-9:
        raise DomainError("gamma0 is not an admissible covariance (det >= 1/4 required)")

    asym = asymptotic_coefficients(model, osc, temperature, half_window=half_window)
    a_vec = np.array(
        [asym.damping, asym.freq_shift, asym.momentum_diffusion, asym.cross_diffusion]
    )
    t_end = float(times[-1])
    if coefficient_source == "asymptotic":
        tab_t = np.array([0.0, max(t_end, 1.0)])
        tab = np.tile(a_vec, (2, 1))
    elif coefficient_source == "table":
        settle = settle_time if settle_time is not None else min(t_end, 200.0)
        settle = max(settle, 1e-6)
        tab_t = np.linspace(0.0, settle, int(table_points))
        tab = np.empty((tab_t.size, 4))
        for i, ti in enumerate(tab_t):
            c = coefficients_at(model, osc, ti, temperature)
            tab[i] = (c.damping, c.freq_shift, c.momentum_diffusion, c.cross_diffusion)
    else:
        raise DomainError("coefficient_source must be 'table' or 'asymptotic'")

    t_settle = tab_t[-1]

    def coeff_vec(t):
        if t >= t_settle:
            return a_vec
        return np.array(
            [
                np.interp(t, tab_t, tab[:, 0]),
                np.interp(t, tab_t, tab[:, 1]),
                np.interp(t, tab_t, tab[:, 2]),
                np.interp(t, tab_t, tab[:, 3]),
            ]
        )

    def rhs(t, y):
        a, b, c = y
        g, shift, dpp, dxp = coeff_vec(t)
        om2 = 1.0 + shift
        da = 2.0 * b
        db = c - om2 * a - 2.0 * g * b - dxp
        dc = -2.0 * om2 * b - 4.0 * g * c + 2.0 * dpp
        return (da, db, dc)

    scale = max(np.abs(g0).max(), 1.0)
    sol = solve_ivp(
        rhs,
        (times[0], t_end) if times[0] < t_end else (0.0, max(t_end, 1e-12)),
        (g0[0, 0], g0[0, 1], g0[1, 1]),
        t_eval=times,
        rtol=rtol,
        atol=rtol * scale * 1e-2,
        method="RK45",
    )
    if not sol.success:
        raise NumericalError(f"covariance propagation failed: {sol.message}")
    mats = np.empty((times.size, 2, 2))
    mats[:, 0, 0] = sol.y[0]
    mats[:, 0, 1] = sol.y[1]
    mats[:, 1, 0] = sol.y[1]
    mats[:, 1, 1] = sol.y[2]
    return CovarianceTrajectory(
        times=times, matrices=mats, table_times=tab_t, table_coefficients=tab
    )

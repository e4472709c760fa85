"""Quadrature helpers shared by the kernel and coefficient machinery.

All helpers return ``(value, error_estimate)`` so callers can budget the
accumulated absolute error of multi-piece integrals and raise
:class:`~bathspec.errors.NumericalError` with a meaningful achieved-error
figure when a target is missed.

The oscillatory rules wrap QUADPACK's cosine/sine-weighted integrator (qawo),
which resolves the envelope rather than the oscillation and therefore copes
with intervals spanning many decades at large frequencies.  Principal values
use the Cauchy-weighted rule (qawc).
"""

from __future__ import annotations

import math
import warnings

import numpy as np
from scipy.integrate import IntegrationWarning, quad
from scipy.special import sici

from .errors import NumericalError

EULER_GAMMA = 0.5772156649015328606

_QUAD_KW = dict(limit=400, epsabs=1e-12, epsrel=1e-10)


def _run_quad(f, a, b, **kw):
    opts = dict(_QUAD_KW)
    opts.update(kw)
    with warnings.catch_warnings():
        # Roundoff warnings on benign oscillatory tails are expected; the
        # returned error estimate is what callers budget against.
        warnings.simplefilter("ignore", IntegrationWarning)
        val, err = quad(f, a, b, **opts)
    if not math.isfinite(val):
        raise NumericalError(
            f"quadrature returned non-finite value on [{a}, {b}]",
            achieved_error=err,
        )
    return val, err


def quad_smooth(f, a, b, points=None, **kw):
    """Adaptive quadrature of a smooth integrand on a finite interval."""
    if a == b:
        return 0.0, 0.0
    if points is not None:
        pts = [p for p in points if a < p < b]
        return _run_quad(f, a, b, points=pts or None, **kw)
    return _run_quad(f, a, b, **kw)


def quad_decades(f, a, b, **kw):
    """Quadrature of a smooth non-oscillatory integrand over many decades.

    Substitutes u = ln(omega) so the adaptive rule sees a well-scaled
    integrand even when b/a is astronomically large.  Requires a > 0.
    """
    if a <= 0:
        raise ValueError("quad_decades requires a > 0")
    if a == b:
        return 0.0, 0.0
    return _run_quad(lambda u: f(math.exp(u)) * math.exp(u), math.log(a), math.log(b), **kw)


def osc_quad(f, a, b, w, kind):
    """integral of f(x) * cos(w x) or f(x) * sin(w x) over [a, b]."""
    if a == b:
        return 0.0, 0.0
    if w == 0.0:
        if kind == "sin":
            return 0.0, 0.0
        return quad_smooth(f, a, b)
    if w < 0.0:
        val, err = osc_quad(f, a, b, -w, kind)
        return (-val, err) if kind == "sin" else (val, err)
    val, err = _run_quad(f, a, b, weight=kind, wvar=w, maxp1=100)
    return val, err


def osc_quad_shifted(f, a, b, w, shift, kind):
    """integral of f(x) * cos/sin(w * (x - shift)) over [a, b]."""
    if a == b or (w == 0.0 and kind == "sin"):
        return 0.0, 0.0
    c, ce = osc_quad(f, a, b, w, "cos")
    s, se = osc_quad(f, a, b, w, "sin")
    cw = math.cos(w * shift)
    sw = math.sin(w * shift)
    if kind == "cos":
        return cw * c + sw * s, abs(cw) * ce + abs(sw) * se
    return cw * s - sw * c, abs(cw) * se + abs(sw) * ce


def pv_quad(f, a, b, pole):
    """Principal value of integral f(x) / (x - pole) dx with pole in (a, b)."""
    if not (a < pole < b):
        raise ValueError("pv_quad requires the pole strictly inside (a, b)")
    return _run_quad(f, a, b, weight="cauchy", wvar=pole)


def si(x):
    """Sine integral Si(x) (odd entire function)."""
    return sici(x)[0]


def cin(x):
    """Entire cosine integral Cin(x) = integral_0^x (1 - cos t)/t dt.

    Even in x; evaluated through Ci for moderate arguments and by series
    below |x| = 1e-3 where the gamma + log - Ci cancellation loses digits.
    """
    ax = abs(x)
    if ax == 0.0:
        return 0.0
    if ax < 1e-3:
        x2 = ax * ax
        return x2 / 4.0 - x2 * x2 / 96.0 + x2 * x2 * x2 / 4320.0
    return EULER_GAMMA + math.log(ax) - sici(ax)[1]


def budget_check(total_err, scale, rel_tol, what):
    """Raise NumericalError if an accumulated error misses its budget."""
    allowed = rel_tol * max(abs(scale), 1e-300)
    if total_err > allowed and total_err > 1e-290:
        raise NumericalError(
            f"{what}: accumulated quadrature error {total_err:.3e} exceeds "
            f"{rel_tol:.1e} of scale {scale:.6e}",
            achieved_error=total_err,
        )


def as_float_array(x):
    arr = np.asarray(x, dtype=float)
    return arr

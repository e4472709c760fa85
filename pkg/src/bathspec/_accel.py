"""Hot kernels for the exponent fit, in two interchangeable flavours.

The numba path compiles the annealing walk, the profiled objective, and the
golden-section polish with @njit; the numpy path mirrors them with vector
operations.  Selection happens once at import:

  * BATHSPEC_NUMBA=0 in the environment forces the numpy path
  * NUMBA_DISABLE_JIT=1 or an unimportable numba also fall back to numpy

Both paths consume identical pre-drawn uniform arrays, so each is fully
deterministic; they agree to floating-point noise but not bit-for-bit.

Kernel conventions: y is the PSD (linear space) or its log (log space),
logx = ln(omega/Omega), logden = ln((1-x^2)^2 + g^2 x^2).  The model in
these variables is C * exp((k-1) logx - logden); the scale C is eliminated
in closed form per candidate k, leaving a 1-D objective in k.
"""

from __future__ import annotations

import math
import os

import numpy as np

__all__ = [
    "backend_name",
    "fit_profile",
    "anneal_restart",
    "golden_polish",
]

_INV_GOLD = (math.sqrt(5.0) - 1.0) / 2.0


def _use_numba() -> bool:
    if os.environ.get("BATHSPEC_NUMBA", "1") == "0":
        return False
    if os.environ.get("NUMBA_DISABLE_JIT", "0") == "1":
        return False
    try:
        import numba  # noqa: F401
    except Exception:
        return False
    return True


# --------------------------------------------------------------------------
# numpy reference implementations


def _profile_np(y, logx, logden, k, log_mode):
    """Best-scale residual at exponent k: returns (mean sq residual, scale)."""
    if log_mode:
        model = (k - 1.0) * logx - logden
        lnc = np.mean(y - model)
        r = y - lnc - model
        return float(np.mean(r * r)), float(math.exp(lnc))
    phi = np.exp((k - 1.0) * logx - logden)
    c = float(np.dot(y, phi) / np.dot(phi, phi))
    r = y - c * phi
    return float(np.mean(r * r)), c


def _anneal_np(y, logx, logden, log_mode, k0, t0, cooling, u_prop, u_acc, k_lo, k_hi):
    k_cur = k0
    r_cur, _ = _profile_np(y, logx, logden, k_cur, log_mode)
    k_best, r_best = k_cur, r_cur
    t = t0
    steps = u_prop.shape[0]
    for j in range(steps):
        width = 0.05 + 1.95 * (t / t0)
        k_new = k_cur + (2.0 * u_prop[j] - 1.0) * width
        if k_new > k_hi:
            k_new = 2.0 * k_hi - k_new
        if k_new < k_lo:
            k_new = 2.0 * k_lo - k_new
        if k_new < k_lo or k_new > k_hi:
            k_new = k_lo + (k_hi - k_lo) * u_prop[j]
        r_new, _ = _profile_np(y, logx, logden, k_new, log_mode)
        delta = r_new - r_cur
        if delta <= 0.0 or (t > 0.0 and u_acc[j] < math.exp(-delta / t)):
            k_cur, r_cur = k_new, r_new
            if r_cur < r_best:
                k_best, r_best = k_cur, r_cur
        t *= cooling
    return k_best, r_best, steps + 1, t


def _golden_np(y, logx, logden, log_mode, a, b, tol):
    c = b - _INV_GOLD * (b - a)
    d = a + _INV_GOLD * (b - a)
    fc, _ = _profile_np(y, logx, logden, c, log_mode)
    fd, _ = _profile_np(y, logx, logden, d, log_mode)
    while (b - a) > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INV_GOLD * (b - a)
            fc, _ = _profile_np(y, logx, logden, c, log_mode)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_GOLD * (b - a)
            fd, _ = _profile_np(y, logx, logden, d, log_mode)
    return 0.5 * (a + b)


# --------------------------------------------------------------------------
# numba implementations (same algorithms, loop form)

if _use_numba():
    from numba import njit

    @njit(cache=True)
    def _profile_nb(y, logx, logden, k, log_mode):
        n = y.shape[0]
        if log_mode:
            acc = 0.0
            for i in range(n):
                acc += y[i] - ((k - 1.0) * logx[i] - logden[i])
            lnc = acc / n
            rss = 0.0
            for i in range(n):
                r = y[i] - lnc - ((k - 1.0) * logx[i] - logden[i])
                rss += r * r
            return rss / n, math.exp(lnc)
        sy = 0.0
        ss = 0.0
        for i in range(n):
            p = math.exp((k - 1.0) * logx[i] - logden[i])
            sy += y[i] * p
            ss += p * p
        c = sy / ss
        rss = 0.0
        for i in range(n):
            p = math.exp((k - 1.0) * logx[i] - logden[i])
            r = y[i] - c * p
            rss += r * r
        return rss / n, c

    @njit(cache=True)
    def _anneal_nb(y, logx, logden, log_mode, k0, t0, cooling, u_prop, u_acc, k_lo, k_hi):
        k_cur = k0
        r_cur, _ = _profile_nb(y, logx, logden, k_cur, log_mode)
        k_best, r_best = k_cur, r_cur
        t = t0
        steps = u_prop.shape[0]
        for j in range(steps):
            width = 0.05 + 1.95 * (t / t0)
            k_new = k_cur + (2.0 * u_prop[j] - 1.0) * width
            if k_new > k_hi:
                k_new = 2.0 * k_hi - k_new
            if k_new < k_lo:
                k_new = 2.0 * k_lo - k_new
            if k_new < k_lo or k_new > k_hi:
                k_new = k_lo + (k_hi - k_lo) * u_prop[j]
            r_new, _ = _profile_nb(y, logx, logden, k_new, log_mode)
            delta = r_new - r_cur
            if delta <= 0.0 or (t > 0.0 and u_acc[j] < math.exp(-delta / t)):
                k_cur, r_cur = k_new, r_new
                if r_cur < r_best:
                    k_best, r_best = k_cur, r_cur
            t *= cooling
        return k_best, r_best, steps + 1, t

    @njit(cache=True)
    def _golden_nb(y, logx, logden, log_mode, a, b, tol):
        inv = _INV_GOLD
        c = b - inv * (b - a)
        d = a + inv * (b - a)
        fc, _ = _profile_nb(y, logx, logden, c, log_mode)
        fd, _ = _profile_nb(y, logx, logden, d, log_mode)
        while (b - a) > tol:
            if fc <= fd:
                b, d, fd = d, c, fc
                c = b - inv * (b - a)
                fc, _ = _profile_nb(y, logx, logden, c, log_mode)
            else:
                a, c, fc = c, d, fd
                d = a + inv * (b - a)
                fd, _ = _profile_nb(y, logx, logden, d, log_mode)
        return 0.5 * (a + b)

    _BACKEND = "numba"
    _profile, _anneal, _golden = _profile_nb, _anneal_nb, _golden_nb
else:
    _BACKEND = "numpy"
    _profile, _anneal, _golden = _profile_np, _anneal_np, _golden_np


def backend_name() -> str:
    return _BACKEND


def fit_profile(y, logx, logden, k, log_mode=False):
    """(mean squared residual, best scale) at exponent k."""
    return _profile(y, logx, logden, float(k), bool(log_mode))


def anneal_restart(y, logx, logden, log_mode, k0, t0, cooling, u_prop, u_acc, k_lo, k_hi):
    """One annealing walk from k0; returns (k_best, resid_best, evals, t_final)."""
    return _anneal(
        y, logx, logden, bool(log_mode), float(k0), float(t0), float(cooling),
        u_prop, u_acc, float(k_lo), float(k_hi),
    )


def golden_polish(y, logx, logden, log_mode, a, b, tol=1e-10):
    """Golden-section minimum of the profiled objective on [a, b]."""
    return _golden(y, logx, logden, bool(log_mode), float(a), float(b), float(tol))

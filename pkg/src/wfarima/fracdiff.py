"""Fractional-difference coefficients and power-series algebra.

Every sequence here is a 1-D float64 array holding the first ``n_terms``
coefficients of a power series in the lag operator, index 0 first.  The
truncation horizon is always supplied by the caller.
"""

import numpy as np
from scipy.signal import lfilter, oaconvolve

__all__ = [
    "frac_diff_coeffs",
    "frac_diff_coeffs_deriv",
    "convolve",
    "poly_inverse",
    "ar_infinity_coeffs",
    "ma_infinity_coeffs",
    "causal_filter",
]


def _check_n_terms(n_terms):
    if int(n_terms) != n_terms or n_terms < 1:
        raise ValueError(f"n_terms must be a positive integer, got {n_terms!r}")
    return int(n_terms)


def frac_diff_coeffs(d, n_terms):
    """Coefficients of ``(1 - z)**d``.

    Parameters
    ----------
    d : float
        Differencing exponent, ``|d| < 1``.
    n_terms : int
        Number of coefficients returned.

    Returns
    -------
    ndarray
        ``alpha_0, ..., alpha_{n_terms-1}`` with ``alpha_0 = 1``.

    Notes
    -----
    Uses ``alpha_j = alpha_{j-1} (j - 1 - d) / j``; the Gamma-ratio form
    overflows long before the recursion loses accuracy.
    """
    n_terms = _check_n_terms(n_terms)
    d = float(d)
    if not np.isfinite(d) or abs(d) >= 1:
        raise ValueError(f"d must be finite with |d| < 1, got {d!r}")
    j = np.arange(1, n_terms, dtype=float)
    out = np.empty(n_terms)
    out[0] = 1.0
    out[1:] = np.cumprod((j - 1.0 - d) / j)
    return out


def frac_diff_coeffs_deriv(d, n_terms):
    """Derivative of :func:`frac_diff_coeffs` with respect to ``d``.

    Returns ``(alpha, dalpha)``.  Writing ``alpha_j = -d * beta_j`` with
    ``beta_j = prod_{k=2}^{j} (k-1-d)/k`` (never zero for ``|d| < 1``) gives
    ``dalpha_j = -beta_j * (1 - d * sum_{k=2}^{j} 1/(k-1-d))``, which stays
    finite at ``d = 0`` where every ``alpha_j`` (``j >= 1``) vanishes.
    """
    alpha = frac_diff_coeffs(d, n_terms)
    dalpha = np.zeros_like(alpha)
    if alpha.size > 1:
        k = np.arange(2, alpha.size, dtype=float)
        beta = np.concatenate(([1.0], np.cumprod((k - 1.0 - d) / k)))
        harm = np.concatenate(([0.0], np.cumsum(1.0 / (k - 1.0 - d))))
        dalpha[1:] = -beta * (1.0 - d * harm)
    return alpha, dalpha


def convolve(a, b, n_terms):
    """First ``n_terms`` coefficients of the Cauchy product of ``a`` and ``b``."""
    n_terms = _check_n_terms(n_terms)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size == 0 or b.size == 0:
        raise ValueError("convolve needs non-empty sequences")
    a = a[:n_terms]
    b = b[:n_terms]
    out = np.zeros(n_terms)
    full = np.convolve(a, b)[:n_terms]
    out[: full.size] = full
    return out


def poly_inverse(p, n_terms):
    """Power-series reciprocal of a polynomial with unit leading coefficient.

    >>> poly_inverse([1.0, -0.5], 4)
    array([1.   , 0.5  , 0.25 , 0.125])
    """
    n_terms = _check_n_terms(n_terms)
    p = np.asarray(p, dtype=float)
    if p.size == 0 or p[0] != 1.0:
        raise ValueError("poly_inverse requires p[0] == 1")
    impulse = np.zeros(n_terms)
    impulse[0] = 1.0
    return lfilter([1.0], p, impulse)


def causal_filter(coeffs, x):
    """Truncated causal convolution ``y_t = sum_{j<=t} coeffs_j x_{t-j}``.

    ``x`` may be 1-D or 2-D (filtered along axis 0).  FFT-based for long
    inputs; the output equals the direct sum up to rounding.
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    c = np.asarray(coeffs, dtype=float)[:n]
    if n == 0:
        return x.copy()
    if x.ndim == 1:
        if n < 64:
            return np.convolve(c, x)[:n]
        return oaconvolve(x, c)[:n]
    if n < 64:
        return np.stack([np.convolve(c, col)[:n] for col in x.T], axis=1)
    return oaconvolve(x, c[:, None], axes=0)[:n]


def _ar_poly(params):
    return np.concatenate(([1.0], -np.asarray(params.ar, dtype=float)))


def _ma_poly(params):
    return np.concatenate(([1.0], -np.asarray(params.ma, dtype=float)))


def ar_infinity_coeffs(params, n_terms):
    """Coefficients ``gamma(theta)`` of ``b^{-1}(z) a(z) (1-z)^d``.

    These map the observations to the innovations,
    ``eps_t = sum_i gamma_i X_{t-i}``.
    """
    params.check_admissible()
    alpha = frac_diff_coeffs(params.d, n_terms)
    return lfilter(_ar_poly(params), _ma_poly(params), alpha)


def ma_infinity_coeffs(params, n_terms):
    """Coefficients ``eta(theta)`` of ``(1-z)^{-d} a^{-1}(z) b(z)``.

    These map the innovations to the observations,
    ``X_t = sum_i eta_i eps_{t-i}``.
    """
    params.check_admissible()
    alpha = frac_diff_coeffs(-params.d, n_terms)
    return lfilter(_ma_poly(params), _ar_poly(params), alpha)

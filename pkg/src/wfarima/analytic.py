"""Closed forms for FARIMA(1, d, 0) with GARCH(1,1) innovations.

These give ``J``, ``I``, ``Psi_m``, ``Gamma_{m,m}`` and ``Sigma_rho`` exactly
and serve as an oracle for the estimation pipeline.  The FARIMA(0, d, 1)
case is the same computation with the AR coefficient replaced by the MA
coefficient.

All quantities assume symmetric innovations with ``E eta^4 = kappa`` and
the fourth-moment condition ``kappa alpha1^2 + beta1^2 + 2 alpha1 beta1 < 1``.
"""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ClosedFormInputs",
    "dilog",
    "c_of_a",
    "j_and_inverse",
    "i_matrix",
    "psi_matrix",
    "closed_gamma_mm",
    "closed_sigma_rho",
    "strong_sigma_rho_closed",
]

PI2_6 = np.pi**2 / 6.0
_SMALL = 1e-8


@dataclass(frozen=True)
class ClosedFormInputs:
    """Model and noise constants for the closed forms.

    ``a`` is the AR coefficient of FARIMA(1, d, 0), or the MA coefficient of
    FARIMA(0, d, 1).
    """

    a: float
    omega: float = 1.0
    alpha1: float = 0.0
    beta1: float = 0.0
    kappa: float = 3.0
    m: int = 3

    def __post_init__(self):
        if not abs(self.a) < 1:
            raise ValueError(f"|a| must be < 1, got {self.a}")
        if self.m < 1:
            raise ValueError("m must be >= 1")

    @property
    def persistence(self):
        return self.alpha1 + self.beta1

    @property
    def sigma2(self):
        return self.omega / (1.0 - self.persistence)

    @property
    def garch_factor(self):
        """``gamma_{eps^2}(1) / sigma^4``; zero for strong noise."""
        a1, b1, k = self.alpha1, self.beta1, self.kappa
        if a1 == 0:
            return 0.0
        den = 1.0 - b1 * b1 - 2 * a1 * b1 - a1 * a1 * k
        if den <= 0:
            raise ValueError("fourth-moment condition kappa a1^2 + b1^2 + 2 a1 b1 < 1 violated")
        return (k - 1) * (a1 - a1 * b1 * b1 - a1 * a1 * b1) / den


def dilog(z, tol=1e-15):
    """Spence function ``Li_2(z) = sum_k z^k / k^2`` for ``|z| <= 1``.

    The series is used for ``|z| <= 1/2`` and summed until the remaining
    tail, bounded by ``|z|^(K+1) / ((K+1)^2 (1 - |z|))``, falls below
    ``tol``.  Larger ``z`` goes through the reflection
    ``Li_2(z) = pi^2/6 - ln(z) ln(1 - z) - Li_2(1 - z)`` and negative ``z``
    through ``Li_2(z) = Li_2(z^2)/2 - Li_2(-z)``.
    """
    z = float(z)
    if not abs(z) <= 1:
        raise ValueError("dilog series needs |z| <= 1")
    if z == 1.0:
        return PI2_6
    if z < 0:
        return 0.5 * dilog(z * z, tol) - dilog(-z, tol)
    if z > 0.5:
        return PI2_6 - np.log(z) * np.log1p(-z) - dilog(1.0 - z, tol)
    total, term_pow, k = 0.0, 1.0, 0
    while True:
        k += 1
        term_pow *= z
        total += term_pow / (k * k)
        if z ** (k + 1) / ((k + 1) ** 2 * (1 - z)) < tol:
            return total


def _log1m_over(x):
    """``ln(1 - x) / x`` with its limit ``-1`` at ``x = 0``."""
    if abs(x) < _SMALL:
        return -1.0 - x / 2.0
    return np.log1p(-x) / x


def _dilog_over(s):
    """``Li_2(s) / s`` with its limit ``1`` at ``s = 0``."""
    if abs(s) < _SMALL:
        return 1.0 + s / 4.0
    return dilog(s) / s


def c_of_a(a):
    """Determinant factor ``pi^2 / (6 (1 - a^2)) - (ln(1 - a) / a)^2``."""
    if not abs(a) < 1:
        raise ValueError(f"|a| must be < 1, got {a}")
    return PI2_6 / (1.0 - a * a) - _log1m_over(a) ** 2


def j_and_inverse(a, sigma2=1.0):
    """``J(theta_0)`` and its inverse for FARIMA(1, d, 0), parameter order ``(a, d)``."""
    c = c_of_a(a)
    L = _log1m_over(a)
    A = 1.0 / (1.0 - a * a)
    j = 2.0 * sigma2 * np.array([[A, -L], [-L, PI2_6]])
    j_inv = np.array([[PI2_6, L], [L, A]]) / (2.0 * sigma2 * c)
    return j, j_inv


def i_matrix(inputs, sigma2=None):
    """``I(theta_0)``: the strong-noise term ``2 sigma^2 J`` plus the GARCH correction."""
    s2 = inputs.sigma2 if sigma2 is None else sigma2
    a, s = inputs.a, inputs.persistence
    j, _ = j_and_inverse(a, s2)
    g = inputs.garch_factor
    if g == 0.0:
        return 2.0 * s2 * j
    off = -_log1m_over(a * s)
    bracket = np.array([[1.0 / (1.0 - a * a * s), off], [off, _dilog_over(s)]])
    return 2.0 * s2 * j + 4.0 * s2 * s2 * g * bracket


def psi_matrix(a, m, sigma2=1.0):
    """``Psi_m = -sigma^2 [a^{i-1}, 1/i]_{i=1..m}``, shape ``(m, 2)``."""
    i = np.arange(1, m + 1)
    return -sigma2 * np.column_stack([a ** (i - 1.0), 1.0 / i])


def closed_gamma_mm(inputs):
    """Diagonal ``Gamma_{m,m} = sigma^4 (I + g diag(s^{i-1}))``."""
    i = np.arange(inputs.m)
    s4 = inputs.sigma2**2
    return s4 * np.diag(1.0 + inputs.garch_factor * inputs.persistence**i)


def _strong_bracket(a, m):
    # pi^2/6 a^{i+j-2} + 1/((1-a^2) i j) + ln(1-a)/a (a^{j-1}/i + a^{i-1}/j)
    i = np.arange(1, m + 1)[:, None].astype(float)
    j = np.arange(1, m + 1)[None, :].astype(float)
    L = _log1m_over(a)
    A = 1.0 / (1.0 - a * a)
    return PI2_6 * a ** (i + j - 2) + A / (i * j) + L * (a ** (j - 1) / i + a ** (i - 1) / j)


def strong_sigma_rho_closed(a, m):
    """``Sigma_rho`` for iid innovations: ``I - bracket / c(a)``."""
    return np.eye(m) - _strong_bracket(a, m) / c_of_a(a)


def closed_sigma_rho(inputs):
    """Exact ``Sigma_rho`` and its eigenvalues (descending).

    The GARCH correction is
    ``g [ s^{i-1} 1{i=j} + M(i,j) / c(a)^2 - (s^{i-1} + s^{j-1}) bracket / c(a) ]``
    with ``g = gamma_{eps^2}(1) / sigma^4`` and ``s = alpha1 + beta1``.

    Returns
    -------
    sigma_rho : ndarray, shape (m, m)
    eigenvalues : ndarray, shape (m,)
    """
    a, m, s = inputs.a, inputs.m, inputs.persistence
    c = c_of_a(a)
    bracket = _strong_bracket(a, m)
    sigma = np.eye(m) - bracket / c
    g = inputs.garch_factor
    if g != 0.0:
        i = np.arange(1, m + 1)[:, None].astype(float)
        j = np.arange(1, m + 1)[None, :].astype(float)
        L = _log1m_over(a)
        A = 1.0 / (1.0 - a * a)
        Ls = _log1m_over(a * s)
        Li = _dilog_over(s)
        As = 1.0 / (1.0 - a * a * s)
        M = (
            (L * As - A * Ls) * (PI2_6 * a ** (j - 1) / i + L / (i * j))
            + (Li * A - L * Ls) * (L * a ** (j - 1) / i + A / (i * j))
            + (PI2_6 * As - L * Ls) * (PI2_6 * a ** (i + j - 2) + L * a ** (i - 1) / j)
            + (Li * L - PI2_6 * Ls) * (L * a ** (i + j - 2) + A * a ** (i - 1) / j)
        )
        si, sj = s ** (i - 1), s ** (j - 1)
        sigma = sigma + g * (si * (i == j) + M / c**2 - (si + sj) * bracket / c)
    sigma = 0.5 * (sigma + sigma.T)
    eig = np.linalg.eigvalsh(sigma)[::-1]
    return sigma, eig

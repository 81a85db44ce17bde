"""FARIMA(p, d, q) parameters, truncated residuals and their gradients.

The model is ``a(L) (1 - L)^d X_t = b(L) eps_t`` with
``a(z) = 1 - sum_i a_i z^i`` and ``b(z) = 1 - sum_j b_j z^j``.  Residuals use
the truncated recursion with ``X_t = eps_t = 0`` for ``t <= 0``; every step is
a causal filter started from rest, so the whole map from ``X`` to the
residuals is convolution with the truncated AR(infinity) coefficients.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter

from .fracdiff import causal_filter, frac_diff_coeffs, frac_diff_coeffs_deriv

__all__ = [
    "FarimaParams",
    "InadmissibleParams",
    "ResidualSet",
    "residuals",
    "residual_gradients",
    "simulate",
    "root_moduli",
]

DEFAULT_D_BOUNDS = (-0.49, 0.49)
DEFAULT_DELTA = 0.01


class InadmissibleParams(ValueError):
    """Raised when a parameter vector lies outside the admissible set."""


def root_moduli(coeffs):
    """Moduli of the roots of ``1 - sum_i coeffs[i-1] z^i``.

    Computed from the companion matrix of the reciprocal polynomial: the
    roots of ``1 - c_1 z - ... - c_p z^p`` are the reciprocals of the
    eigenvalues of the companion matrix with first row ``c``.
    """
    c = np.asarray(coeffs, dtype=float)
    c = np.trim_zeros(c, "b")
    if c.size == 0:
        return np.array([])
    comp = np.zeros((c.size, c.size))
    comp[0] = c
    comp[1:, :-1] = np.eye(c.size - 1)
    eig = np.linalg.eigvals(comp)
    with np.errstate(divide="ignore", over="ignore"):
        return 1.0 / np.abs(eig)


@dataclass(frozen=True)
class FarimaParams:
    """Parameter vector ``theta = (ar, ma, d)``.

    Parameters
    ----------
    ar, ma : sequence of float
        ``a_1..a_p`` and ``b_1..b_q`` in the sign convention above.
    d : float
        Long-memory parameter.
    d_bounds : tuple of float
        Admissible interval ``[d1, d2]`` inside ``(-1/2, 1/2)``.
    delta : float
        Roots of both lag polynomials must have modulus ``>= 1 + delta``.
    """

    ar: tuple = ()
    ma: tuple = ()
    d: float = 0.0
    d_bounds: tuple = DEFAULT_D_BOUNDS
    delta: float = DEFAULT_DELTA

    def __post_init__(self):
        object.__setattr__(self, "ar", tuple(float(v) for v in np.atleast_1d(self.ar)))
        object.__setattr__(self, "ma", tuple(float(v) for v in np.atleast_1d(self.ma)))
        object.__setattr__(self, "d", float(self.d))
        object.__setattr__(self, "d_bounds", tuple(float(v) for v in self.d_bounds))

    @property
    def p(self):
        return len(self.ar)

    @property
    def q(self):
        return len(self.ma)

    @property
    def dim(self):
        return self.p + self.q + 1

    def as_vector(self):
        return np.array(self.ar + self.ma + (self.d,))

    @classmethod
    def from_vector(cls, vec, p, q, **kw):
        vec = np.asarray(vec, dtype=float)
        if vec.size != p + q + 1:
            raise ValueError(f"expected {p + q + 1} parameters, got {vec.size}")
        return cls(ar=vec[:p], ma=vec[p : p + q], d=vec[-1], **kw)

    def admissibility_error(self):
        """Return a message describing the violation, or None if admissible."""
        vec = self.as_vector()
        if not np.all(np.isfinite(vec)):
            return "non-finite parameter"
        d1, d2 = self.d_bounds
        if not (-0.5 < d1 < d2 < 0.5):
            return f"d_bounds {self.d_bounds} not inside (-1/2, 1/2)"
        if not (d1 <= self.d <= d2):
            return f"d={self.d} outside [{d1}, {d2}]"
        bound = 1.0 + self.delta
        for name, coeffs in (("AR", self.ar), ("MA", self.ma)):
            mod = root_moduli(coeffs)
            if mod.size and mod.min() < bound:
                return f"{name} root modulus {mod.min():.6g} < 1 + delta = {bound}"
        return None

    def is_admissible(self):
        return self.admissibility_error() is None

    def check_admissible(self):
        msg = self.admissibility_error()
        if msg is not None:
            raise InadmissibleParams(msg)
        return self


@dataclass
class ResidualSet:
    """Truncated residuals, optionally with their parameter gradients.

    ``gradients`` has shape ``(n, p + q + 1)`` with columns ordered
    ``(ar, ma, d)`` like :meth:`FarimaParams.as_vector`.
    """

    residuals: np.ndarray
    theta: FarimaParams
    gradients: np.ndarray = field(default=None)

    @property
    def n(self):
        return self.residuals.shape[0]


def _ar_poly(theta):
    return np.concatenate(([1.0], -np.asarray(theta.ar)))


def _ma_poly(theta):
    return np.concatenate(([1.0], -np.asarray(theta.ma)))


def _prepare(theta, x):
    theta.check_admissible()
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("x must be a non-empty 1-D series")
    if not np.all(np.isfinite(x)):
        raise ValueError("x contains non-finite values")
    return x


def _shift(y, k):
    out = np.zeros_like(y)
    if k < y.size:
        out[k:] = y[: y.size - k]
    return out


def residuals(theta, x):
    """Truncated residuals ``eps~_t(theta)``, ``t = 1..n``."""
    x = _prepare(theta, x)
    y = causal_filter(frac_diff_coeffs(theta.d, x.size), x)
    eps = lfilter(_ar_poly(theta), _ma_poly(theta), y)
    return ResidualSet(residuals=eps, theta=theta)


def residual_gradients(theta, x):
    """Residuals together with ``d eps~_t / d theta`` for every ``t``."""
    x = _prepare(theta, x)
    n = x.size
    alpha, dalpha = frac_diff_coeffs_deriv(theta.d, n)
    a_poly, b_poly = _ar_poly(theta), _ma_poly(theta)
    y = causal_filter(alpha, x)
    eps = lfilter(a_poly, b_poly, y)

    grads = np.empty((n, theta.dim))
    for i in range(1, theta.p + 1):
        grads[:, i - 1] = lfilter([1.0], b_poly, -_shift(y, i))
    for j in range(1, theta.q + 1):
        grads[:, theta.p + j - 1] = lfilter([1.0], b_poly, _shift(eps, j))
    grads[:, -1] = lfilter(a_poly, b_poly, causal_filter(dalpha, x))
    return ResidualSet(residuals=eps, theta=theta, gradients=grads)


def simulate(theta, noise, burn=0):
    """Generate ``X`` from innovations by inverting the residual recursion.

    Parameters
    ----------
    theta : FarimaParams
    noise : array_like
        Innovations of length ``n + burn``.
    burn : int
        Leading values discarded from the output.

    Returns
    -------
    ndarray
        Series of length ``len(noise) - burn``.  Applying :func:`residuals`
        to the full (unburnt) output returns ``noise`` up to rounding.
    """
    theta.check_admissible()
    noise = np.asarray(noise, dtype=float)
    burn = int(burn)
    if burn < 0 or burn >= noise.size:
        raise ValueError("need 0 <= burn < len(noise)")
    w = lfilter(_ma_poly(theta), _ar_poly(theta), noise)
    x = causal_filter(frac_diff_coeffs(-theta.d, noise.size), w)
    return x[burn:]

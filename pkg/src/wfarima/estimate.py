"""Conditional least squares estimation of FARIMA(p, d, q) models."""

import logging
from dataclasses import dataclass
from math import comb

import numpy as np
from scipy.optimize import minimize

from .model import (
    DEFAULT_D_BOUNDS,
    DEFAULT_DELTA,
    FarimaParams,
    ResidualSet,
    residual_gradients,
)

__all__ = ["FitResult", "fit", "j_matrix", "objective_and_gradient"]

log = logging.getLogger(__name__)

GRAD_TOL = 1e-5
MAX_ITER = 500


@dataclass
class FitResult:
    """Outcome of :func:`fit`.

    Attributes
    ----------
    theta_hat : FarimaParams
    sigma2_hat : float
        Mean squared residual, which is also the objective value.
    objective : float
        ``Q_n(theta_hat)``.
    j_hat : ndarray
        ``(2/n) sum_t g_t g_t'`` with ``g_t`` the residual gradient.
    residual_set : ResidualSet
        Residuals and gradients at ``theta_hat``.
    converged : bool
        Whether the projected gradient met the tolerance.
    iterations : int
        Optimizer iterations summed over all starts.
    grad_norm : float
        Sup-norm of the projected gradient of ``Q_n / mean(x^2)``.
    """

    theta_hat: FarimaParams
    sigma2_hat: float
    objective: float
    j_hat: np.ndarray
    residual_set: ResidualSet
    converged: bool
    iterations: int
    grad_norm: float

    @property
    def n(self):
        return self.residual_set.n

    @property
    def residuals(self):
        return self.residual_set.residuals


def j_matrix(rs):
    """Empirical ``J``: twice the mean outer product of residual gradients."""
    g = rs.gradients
    if g is None:
        raise ValueError("ResidualSet has no gradients")
    n = g.shape[0]
    if n == 0:
        raise ValueError("empty ResidualSet")
    j = 2.0 / n * (g.T @ g)
    return 0.5 * (j + j.T)


def objective_and_gradient(theta, x):
    """``Q_n(theta)`` and its gradient ``(2/n) sum_t eps_t d eps_t / d theta``."""
    rs = residual_gradients(theta, x)
    e = rs.residuals
    n = e.size
    return e @ e / n, 2.0 / n * (e @ rs.gradients), rs


def _coef_bounds(order, delta):
    # Coefficient i of a degree-`order` polynomial with all roots of modulus
    # >= 1 + delta is at most comb(order, i) / (1 + delta)**i in absolute value.
    return [
        (-comb(order, i) / (1 + delta) ** i, comb(order, i) / (1 + delta) ** i)
        for i in range(1, order + 1)
    ]


def _projected_grad(v, g, bounds):
    pg = g.copy()
    for k, (lo, hi) in enumerate(bounds):
        if v[k] <= lo and g[k] > 0:
            pg[k] = 0.0
        elif v[k] >= hi and g[k] < 0:
            pg[k] = 0.0
    return pg


def fit(x, p=0, q=0, d_bounds=DEFAULT_D_BOUNDS, delta=DEFAULT_DELTA,
        gtol=GRAD_TOL, maxiter=MAX_ITER, d_starts=None):
    """Least squares fit of a FARIMA(p, d, q) model.

    Parameters
    ----------
    x : array_like
        Centered observations.
    p, q : int
        AR and MA orders.
    d_bounds : (float, float)
        Search interval for ``d``, inside ``(-1/2, 1/2)``.
    delta : float
        Root-modulus margin of the admissible set.
    gtol : float
        Tolerance on the sup-norm of the projected gradient of
        ``Q_n / mean(x^2)``; normalizing makes the rule scale free.
    maxiter : int
        Iteration cap per start.
    d_starts : sequence of float, optional
        Starting values for ``d``; AR and MA coefficients start at zero.
        Defaults to 10%, 50% and 90% of the way through ``d_bounds``.

    Returns
    -------
    FitResult
        ``converged`` is False rather than an exception when the tolerance
        is not met.
    """
    x = np.asarray(x, dtype=float)
    k = p + q + 1
    if x.ndim != 1 or x.size <= 10 * k:
        raise ValueError(f"series too short: need n > {10 * k} for p={p}, q={q}")
    d1, d2 = map(float, d_bounds)
    if not (-0.5 < d1 < d2 < 0.5):
        raise ValueError("d_bounds must satisfy -1/2 < d1 < d2 < 1/2")
    scale = float(np.mean(x * x)) or 1.0
    bounds = _coef_bounds(p, delta) + _coef_bounds(q, delta) + [(d1, d2)]
    mk = dict(d_bounds=(d1, d2), delta=delta)
    penalty = [1e6]

    def fun(v):
        theta = FarimaParams.from_vector(v, p, q, **mk)
        if not theta.is_admissible():
            return penalty[0], np.zeros_like(v)
        val, grad, _ = objective_and_gradient(theta, x)
        val /= scale
        if not np.isfinite(val):
            return penalty[0], np.zeros_like(v)
        penalty[0] = max(penalty[0], 10 * val)
        return val, grad / scale

    if d_starts is None:
        d_starts = (d1 + 0.1 * (d2 - d1), 0.5 * (d1 + d2), d2 - 0.1 * (d2 - d1))

    best = None
    iterations = 0
    for d0 in d_starts:
        v0 = np.zeros(k)
        v0[-1] = d0
        res = minimize(fun, v0, jac=True, method="L-BFGS-B", bounds=bounds,
                       options=dict(maxiter=maxiter, gtol=gtol * 1e-2, ftol=1e-15))
        iterations += int(res.nit)
        if best is None or res.fun < best.fun:
            best = res

    theta_hat = FarimaParams.from_vector(best.x, p, q, **mk)
    val, grad, rs = objective_and_gradient(theta_hat, x)
    pg = _projected_grad(best.x, grad / scale, bounds)
    grad_norm = float(np.max(np.abs(pg)))
    converged = bool(grad_norm <= gtol)
    if not converged:
        log.warning("fit did not reach gradient tolerance: %.3g > %.3g", grad_norm, gtol)
    return FitResult(
        theta_hat=theta_hat,
        sigma2_hat=float(val),
        objective=float(val),
        j_hat=j_matrix(rs),
        residual_set=rs,
        converged=converged,
        iterations=iterations,
        grad_norm=grad_norm,
    )

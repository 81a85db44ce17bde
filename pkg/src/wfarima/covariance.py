"""Asymptotic covariance of residual autocorrelations under weak noise.

Builds the cross moment ``Psi_m``, the score/autocovariance process ``U_t``,
a VAR spectral estimate of its long-run covariance ``Xi`` and from those
``Sigma_rho``, whose eigenvalues weight the chi-square mixture that is the
null law of the Box-Pierce and Ljung-Box statistics.
"""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "UhatSeries",
    "RhoCovariance",
    "lag_matrix",
    "psi_hat",
    "u_hat",
    "spectral_ar_xi",
    "max_ar_order",
    "assemble_sigma_rho",
    "strong_sigma_rho",
    "rho_covariance",
]

J_COND_LIMIT = 1e12


def lag_matrix(e, m):
    """``n x m`` matrix whose column ``h-1`` is ``e`` lagged ``h`` steps, zero padded."""
    e = np.asarray(e, dtype=float)
    n = e.size
    out = np.zeros((n, m))
    for h in range(1, min(m, n) + 1):
        out[h:, h - 1] = e[: n - h]
    return out


@dataclass
class UhatSeries:
    """Rows ``U_t = (U_1t', U_2t')'``.

    The first ``k = p + q + 1`` columns are ``-2 J^{-1} e_t de_t/dtheta``, the
    last ``m`` are ``e_t e_{t-h}`` for ``h = 1..m``.
    """

    values: np.ndarray
    k: int
    m: int

    @property
    def n(self):
        return self.values.shape[0]

    @property
    def score_block(self):
        return self.values[:, : self.k]

    @property
    def autocov_block(self):
        return self.values[:, self.k :]


@dataclass
class RhoCovariance:
    """Estimated ``Sigma_rho`` with the pieces it was assembled from."""

    psi_hat: np.ndarray
    xi_hat: np.ndarray
    sigma_rho: np.ndarray
    sigma_gamma: np.ndarray
    eigenvalues: np.ndarray
    ar_order: int
    sigma2_hat: float
    clipped: float = 0.0

    @property
    def m(self):
        return self.sigma_rho.shape[0]

    @property
    def k(self):
        return self.psi_hat.shape[1]

    @property
    def sigma_theta(self):
        """Long-run covariance of the parameter estimator, ``J^-1 I J^-1``."""
        return self.xi_hat[: self.k, : self.k]


def psi_hat(rs, m):
    """``(1/n) sum_t (e_{t-1},...,e_{t-m})' de_t/dtheta'``."""
    if rs.gradients is None:
        raise ValueError("ResidualSet has no gradients")
    n = rs.n
    if m < 1 or m >= n:
        raise ValueError(f"need 1 <= m < n, got m={m}, n={n}")
    return lag_matrix(rs.residuals, m).T @ rs.gradients / n


def u_hat(rs, j_hat, m):
    """Plug-in version of ``U_t`` built from residuals, gradients and ``J``."""
    if rs.gradients is None:
        raise ValueError("ResidualSet has no gradients")
    j_hat = np.asarray(j_hat, dtype=float)
    cond = np.linalg.cond(j_hat)
    if not np.isfinite(cond) or cond > J_COND_LIMIT:
        raise np.linalg.LinAlgError(
            f"J is singular (condition number {cond:.3g}); the model looks under-identified"
        )
    e = rs.residuals
    score = e[:, None] * rs.gradients
    u1 = -2.0 * np.linalg.solve(j_hat, score.T).T
    u2 = lag_matrix(e, m) * e[:, None] if m > 0 else np.zeros((e.size, 0))
    return UhatSeries(values=np.hstack([u1, u2]), k=rs.gradients.shape[1], m=m)


def max_ar_order(n, dim):
    """Largest VAR order allowed: ``floor(n**(1/5))`` and ``n > 10 r dim``."""
    r = int(np.floor(n ** 0.2))
    while r > 1 and n <= 10 * r * dim:
        r -= 1
    return r


def _var_design(u, r, start):
    n = u.shape[0]
    y = u[start:]
    z = np.hstack([u[start - i : n - i] for i in range(1, r + 1)])
    return y, z


def _var_fit(u, r, start):
    y, z = _var_design(u, r, start)
    coef, _, rank, _ = np.linalg.lstsq(z, y, rcond=None)
    if rank < z.shape[1]:
        raise np.linalg.LinAlgError(
            f"VAR({r}) regression is rank deficient (rank {rank} < {z.shape[1]}); lower the order"
        )
    resid = y - z @ coef
    return coef, resid


def _bic_order(u, r_max):
    n, dim = u.shape
    nobs = n - r_max
    best_r, best = 1, np.inf
    for r in range(1, r_max + 1):
        _, resid = _var_fit(u, r, r_max)
        sign, logdet = np.linalg.slogdet(resid.T @ resid / nobs)
        if sign <= 0:
            continue
        crit = logdet + r * dim * dim * np.log(nobs) / nobs
        if crit < best:
            best_r, best = r, crit
    return best_r


def spectral_ar_xi(u, r="auto"):
    """VAR spectral estimate of the long-run covariance of ``U_t``.

    Parameters
    ----------
    u : UhatSeries or ndarray
    r : int or "auto"
        VAR order.  ``"auto"`` picks the BIC minimizer over
        ``1..max_ar_order(n, dim)``; ``0`` returns the sample covariance.

    Returns
    -------
    xi : ndarray
        ``Delta(1)^{-1} Sigma_v Delta(1)'^{-1}``, symmetrized.
    r_used : int
    """
    values = u.values if isinstance(u, UhatSeries) else np.asarray(u, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    n, dim = values.shape
    values = values - values.mean(axis=0)
    if r == "auto":
        r_max = max_ar_order(n, dim)
        r = _bic_order(values, r_max) if r_max >= 1 else 0
    r = int(r)
    if r < 0:
        raise ValueError("VAR order must be non-negative")
    if r == 0:
        xi = values.T @ values / n
        return 0.5 * (xi + xi.T), 0
    if n <= 10 * r * dim:
        raise ValueError(f"series too short for VAR({r}) in dimension {dim}: need n > {10 * r * dim}")
    coef, resid = _var_fit(values, r, r)
    sigma_v = resid.T @ resid / resid.shape[0]
    delta1 = np.eye(dim) - sum(coef[(i - 1) * dim : i * dim].T for i in range(1, r + 1))
    inv = np.linalg.inv(delta1)
    xi = inv @ sigma_v @ inv.T
    return 0.5 * (xi + xi.T), r


def assemble_sigma_rho(psi, xi, sigma2_hat, m, ar_order=-1):
    """Combine ``Psi``, ``Xi`` and ``sigma^2`` into ``Sigma_rho`` and its eigenvalues.

    Negative eigenvalues of the symmetrized matrix are set to zero; the
    largest clipped magnitude is kept in ``clipped``.
    """
    psi = np.asarray(psi, dtype=float)
    xi = np.asarray(xi, dtype=float)
    k = psi.shape[1]
    if psi.shape[0] != m or xi.shape != (k + m, k + m):
        raise ValueError(f"inconsistent blocks: psi {psi.shape}, xi {xi.shape}, m={m}")
    if not (np.all(np.isfinite(psi)) and np.all(np.isfinite(xi)) and np.isfinite(sigma2_hat)):
        raise ValueError("non-finite input to assemble_sigma_rho")
    s_theta = xi[:k, :k]
    s_theta_gamma = xi[:k, k:]
    gamma_mm = xi[k:, k:]
    cross = psi @ s_theta_gamma
    sigma_gamma = gamma_mm + psi @ s_theta @ psi.T + cross + cross.T
    sigma_rho = sigma_gamma / sigma2_hat**2
    sym = 0.5 * (sigma_rho + sigma_rho.T)
    eig = np.linalg.eigvalsh(sym)[::-1]
    clipped = float(max(0.0, -eig.min())) if eig.size else 0.0
    return RhoCovariance(
        psi_hat=psi,
        xi_hat=xi,
        sigma_rho=sym,
        sigma_gamma=0.5 * (sigma_gamma + sigma_gamma.T),
        eigenvalues=np.clip(eig, 0.0, None),
        ar_order=int(ar_order),
        sigma2_hat=float(sigma2_hat),
        clipped=clipped,
    )


def strong_sigma_rho(psi, j_hat, sigma2_hat, m):
    """Strong-noise reduction ``I_m - (2 / sigma^2) Psi J^{-1} Psi'``."""
    psi = np.asarray(psi, dtype=float)
    j_hat = np.asarray(j_hat, dtype=float)
    if np.linalg.cond(j_hat) > J_COND_LIMIT:
        raise np.linalg.LinAlgError("J is singular")
    out = np.eye(m) - 2.0 / sigma2_hat * psi @ np.linalg.solve(j_hat, psi.T)
    return 0.5 * (out + out.T)


def rho_covariance(fit_result, m, ar_order="auto"):
    """Full pipeline from a :class:`~wfarima.estimate.FitResult` to ``Sigma_rho``.

    Returns the covariance and the ``UhatSeries`` it was built from.
    """
    rs = fit_result.residual_set
    psi = psi_hat(rs, m)
    u = u_hat(rs, fit_result.j_hat, m)
    xi, r_used = spectral_ar_xi(u, ar_order)
    return assemble_sigma_rho(psi, xi, fit_result.sigma2_hat, m, r_used), u

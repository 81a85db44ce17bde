"""Fit, covariance and all six portmanteau tests for one series."""

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .covariance import psi_hat, rho_covariance, strong_sigma_rho, u_hat
from .estimate import fit as fit_model
from .model import DEFAULT_D_BOUNDS
from .portmanteau import (
    ImhofError,
    TestReport,
    acf,
    sn_matrices,
    sn_portmanteau,
    standard_portmanteau,
    weak_portmanteau,
)

__all__ = ["DiagnosisReport", "AcfBands", "run_tests", "acf_bands", "diagnose"]

log = logging.getLogger(__name__)


@dataclass
class AcfBands:
    """Residual autocorrelations with half-widths of three significance bands.

    ``strong`` uses the iid-noise covariance, ``weak`` the estimated
    weak-noise covariance, ``sn`` the self-normalized route.
    """

    lags: np.ndarray
    rho: np.ndarray
    strong: np.ndarray
    weak: np.ndarray
    sn: np.ndarray
    level: float


@dataclass
class DiagnosisReport:
    fit: object
    std_errors: np.ndarray
    param_p_values: np.ndarray
    tests: list
    bands: AcfBands
    ar_order: int
    warnings: list = field(default_factory=list)


def run_tests(fit, m_list, levels=(0.05,), ar_order="auto", table=None):
    """All six tests for every ``m`` in ``m_list``.

    Returns a list of :class:`TestReport`.  A failure in one route at one
    ``m`` yields reports with status ``"failed"`` instead of an exception.
    """
    m_list = sorted(int(m) for m in m_list)
    m_max = m_list[-1]
    rs = fit.residual_set
    u = u_hat(rs, fit.j_hat, m_max)
    psi = psi_hat(rs, m_max)
    acf_max = acf(rs.residuals, m_max)
    out = []
    for m in m_list:
        acf_m = acf(rs.residuals, m)
        out.extend(standard_portmanteau(fit, m, levels, acf_m))
        try:
            cov, _ = rho_covariance(fit, m, ar_order)
            out.extend(weak_portmanteau(fit, cov, m, levels, acf_m))
        except (np.linalg.LinAlgError, ValueError, ImhofError) as exc:
            out.extend(_failed(("bp_weak", "lb_weak"), m, exc))
        try:
            out.extend(sn_portmanteau(fit, u, psi[:m], m, levels, table, acf_max))
        except (np.linalg.LinAlgError, ValueError) as exc:
            out.extend(_failed(("bp_sn", "lb_sn"), m, exc))
    return out


def _failed(methods, m, exc):
    return [TestReport(method=meth, m=m, statistic=float("nan"), status="failed", message=str(exc))
            for meth in methods]


def acf_bands(fit, m, level=0.05, ar_order="auto", table=None):
    """ACF of the residuals with strong, weak and self-normalized band half-widths."""
    from .lobato import critical_value, default_table

    if table is None:
        table = default_table()
    rs = fit.residual_set
    n = rs.n
    a = acf(rs.residuals, m)
    psi = psi_hat(rs, m)
    z = stats.norm.ppf(1 - level / 2)
    strong = strong_sigma_rho(psi, fit.j_hat, fit.sigma2_hat, m)
    cov, u = rho_covariance(fit, m, ar_order)
    c, _ = sn_matrices(u, psi, a)
    u1 = critical_value(table, 1, 1 - level)
    return AcfBands(
        lags=np.arange(1, m + 1),
        rho=a.rho,
        strong=z * np.sqrt(np.clip(np.diag(strong), 0, None) / n),
        weak=z * np.sqrt(np.clip(np.diag(cov.sigma_rho), 0, None) / n),
        sn=np.sqrt(u1 * np.clip(np.diag(c), 0, None) / (n * a.sigma2**2)),
        level=level,
    ), cov


def diagnose(x, p=0, q=0, m_max=12, level=0.05, ar_order="auto", d_bounds=DEFAULT_D_BOUNDS,
             table=None):
    """Fit a FARIMA(p, d, q) model and run every test for ``m = 1..m_max``.

    Standard errors come from the diagonal of the estimated
    ``J^{-1} I J^{-1}`` block of the long-run covariance of ``U_t``.
    """
    warnings = []
    f = fit_model(x, p, q, d_bounds=d_bounds)
    if not f.converged:
        warnings.append(f"fit did not converge (projected gradient {f.grad_norm:.3g})")
    tests = run_tests(f, range(1, m_max + 1), (level,), ar_order, table)
    bands, cov = acf_bands(f, m_max, level, ar_order, table)
    se = np.sqrt(np.clip(np.diag(cov.sigma_theta), 0, None) / f.n)
    theta = f.theta_hat.as_vector()
    with np.errstate(divide="ignore"):
        pv = 2 * stats.norm.sf(np.abs(theta / se))
    for r in tests:
        if r.status == "failed":
            warnings.append(f"{r.method} m={r.m}: {r.message}")
    return DiagnosisReport(fit=f, std_errors=se, param_p_values=pv, tests=tests, bands=bands,
                           ar_order=cov.ar_order, warnings=warnings)

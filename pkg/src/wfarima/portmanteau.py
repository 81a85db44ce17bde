"""Box-Pierce and Ljung-Box statistics with three ways to calibrate them.

* standard: chi-square with ``m - (p + q + 1)`` degrees of freedom, valid
  for iid innovations only;
* weak: the weighted chi-square mixture ``sum_k xi_k Z_k^2`` whose weights are
  the eigenvalues of the estimated ``Sigma_rho``, evaluated with Imhof's
  inversion formula;
* self-normalized: a quadratic form in the recursive partial sums of
  ``Lambda U_t`` compared with simulated critical values of ``U_m``.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, stats

__all__ = [
    "AcfSet",
    "TestReport",
    "ImhofError",
    "SingularSNMatrix",
    "METHODS",
    "acf",
    "bp_lb",
    "imhof_tail",
    "weak_portmanteau",
    "standard_portmanteau",
    "sn_matrices",
    "sn_portmanteau",
]

METHODS = ("lb_sn", "bp_sn", "lb_weak", "bp_weak", "lb_standard", "bp_standard")
DEFAULT_LEVELS = (0.05,)

WEIGHT_DROP = 1e-10
SN_COND_LIMIT = 1e12
_IMHOF_EPS = 1e-9
_IMHOF_SPLIT = 5.0
_DIRECT_PHASE = 200.0


class ImhofError(RuntimeError):
    """The Imhof integral did not reach its accuracy target."""


class SingularSNMatrix(np.linalg.LinAlgError):
    """The self-normalizing matrix cannot be inverted reliably."""

    def __init__(self, smallest, cond):
        self.smallest = float(smallest)
        self.cond = float(cond)
        super().__init__(
            f"self-normalizing matrix is singular: smallest eigenvalue {smallest:.3g}, "
            f"condition number {cond:.3g}"
        )


@dataclass
class AcfSet:
    """Residual autocovariances ``gamma(0..m)`` and autocorrelations ``rho(1..m)``."""

    gamma: np.ndarray
    rho: np.ndarray
    n: int
    m: int

    @property
    def sigma2(self):
        return float(self.gamma[0])


@dataclass
class TestReport:
    """Outcome of one portmanteau test at one ``m``.

    ``p_value`` is set for the standard and weak routes, ``critical_value``
    (a map from significance level to threshold) for the self-normalized
    route.  ``status`` is ``"ok"``, ``"n.a."`` when the test is not defined
    at this ``m``, or ``"failed"`` with the reason in ``message``.
    """

    method: str
    m: int
    statistic: float
    p_value: float = None
    critical_value: dict = None
    eigenvalues: np.ndarray = None
    df: int = None
    reject_at: dict = field(default_factory=dict)
    status: str = "ok"
    message: str = ""


def acf(residuals, m):
    """Sample autocovariances and autocorrelations of the residuals.

    ``gamma(h) = (1/n) sum_{t=h+1}^n e_t e_{t-h}``; no mean is removed.
    """
    e = np.asarray(residuals, dtype=float)
    n = e.size
    m = int(m)
    if m < 0 or m >= n:
        raise ValueError(f"need 0 <= m < n, got m={m}, n={n}")
    gamma = np.array([e[h:] @ e[: n - h] for h in range(m + 1)]) / n
    if not gamma[0] > 0:
        raise ValueError("residuals are identically zero")
    return AcfSet(gamma=gamma, rho=gamma[1:] / gamma[0], n=n, m=m)


def _lb_factors(n, m):
    h = np.arange(1, m + 1)
    return (n + 2.0) / (n - h)


def bp_lb(acf_set):
    """``Q_BP = n sum rho^2`` and ``Q_LB = n (n + 2) sum rho^2 / (n - h)``."""
    if acf_set.m < 1:
        raise ValueError("m must be >= 1")
    r2 = acf_set.rho**2
    n = acf_set.n
    return float(n * r2.sum()), float(n * (r2 * _lb_factors(n, acf_set.m)).sum())


def _imhof_parts(w, x):
    def phase(u):
        return 0.5 * np.sum(np.arctan(w * u))

    def envelope(u):
        return np.exp(-0.25 * np.sum(np.log1p((w * u) ** 2))) / u

    def head(u):
        if u == 0.0:
            return 0.5 * (w.sum() - x)
        return np.sin(phase(u) - 0.5 * x * u) * envelope(u)

    return phase, envelope, head


def _envelope_cutoff(envelope, eps):
    # smallest power of two past which the amplitude 1/(u rho(u)) is below eps
    u = 1.0
    while envelope(u) > eps and u < 1e300:
        u *= 2.0
    return u


def imhof_tail(weights, x, eps=_IMHOF_EPS):
    """``P(sum_k w_k Z_k^2 > x)`` for independent standard normals ``Z_k``.

    Parameters
    ----------
    weights : array_like
        Nonnegative weights; entries below ``1e-10 * max(weights)`` are dropped.
    x : float
    eps : float
        Absolute error requested from each quadrature piece.

    Returns
    -------
    float
        Probability clipped to ``[0, 1]``.

    Notes
    -----
    Weights are rescaled so the largest is 1.  The inversion integral is
    split into a head, integrated by adaptive Gauss-Kronrod, and a tail on
    which the sine of the phase is expanded so that the two pieces become
    Fourier integrals in ``x u / 2`` with smooth, monotone amplitudes; QUADPACK's
    QAWF integrates those to infinity.  The split is at ``u = 5`` unless the
    amplitude ``1 / (u rho(u))`` drops below ``eps`` within a few hundred
    radians of ``x u / 2``, in which case it moves out to that point.
    """
    w = np.asarray(weights, dtype=float).ravel()
    if w.size == 0 or not np.all(np.isfinite(w)):
        raise ValueError("weights must be a non-empty finite vector")
    if np.any(w < 0):
        raise ValueError("weights must be nonnegative")
    wmax = w.max()
    if wmax <= 0:
        raise ValueError("all weights are zero")
    x = float(x)
    if not np.isfinite(x):
        raise ValueError("x must be finite")
    if x <= 0:
        return 1.0
    # scale so that the largest weight is 1
    w = w[w >= WEIGHT_DROP * wmax] / wmax
    x = x / wmax

    phase, envelope, head = _imhof_parts(w, x)
    half_x = 0.5 * x
    cutoff = _envelope_cutoff(envelope, eps)
    # Head: adaptive Gauss-Kronrod on dyadic pieces up to the split point.
    # Few oscillations before the amplitude is negligible -> split at the
    # cutoff; otherwise split early and let QAWF handle the oscillating tail.
    split = cutoff if half_x * cutoff <= _DIRECT_PHASE else _IMHOF_SPLIT
    edges = [0.0] + [2.0**j for j in range(int(np.log2(split)) + 1)]
    if edges[-1] < split:
        edges.append(split)
    val = err = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        v, e = integrate.quad(head, lo, hi, epsabs=eps / len(edges), epsrel=0.0, limit=200)
        val += v
        err += e
    tail_cos, err_c = integrate.quad(
        lambda u: np.sin(phase(u)) * envelope(u), split, np.inf,
        weight="cos", wvar=half_x, epsabs=eps, limlst=100,
    )
    tail_sin, err_s = integrate.quad(
        lambda u: np.cos(phase(u)) * envelope(u), split, np.inf,
        weight="sin", wvar=half_x, epsabs=eps, limlst=100,
    )
    tail = tail_cos - tail_sin
    err += err_c + err_s
    if not np.isfinite(err) or err > 1e3 * eps:
        raise ImhofError(f"Imhof quadrature error estimate {err:.3g} exceeds target (x={x:.6g})")
    p = 0.5 + (val + tail) / np.pi
    return float(min(1.0, max(0.0, p)))


def _decisions_from_p(p, levels):
    return {float(a): bool(p < a) for a in levels}


def standard_portmanteau(fit, m, levels=DEFAULT_LEVELS, acf_set=None):
    """Box-Pierce and Ljung-Box with chi-square ``m - (p + q + 1)`` p-values.

    When ``m <= p + q + 1`` both reports carry status ``"n.a."``.
    """
    a = acf(fit.residuals, m) if acf_set is None else acf_set
    q_bp, q_lb = bp_lb(a)
    df = m - fit.theta_hat.dim
    out = []
    for method, q in (("bp_standard", q_bp), ("lb_standard", q_lb)):
        if df <= 0:
            out.append(TestReport(method=method, m=m, statistic=q, status="n.a.",
                                  message=f"m={m} <= p+q+1={fit.theta_hat.dim}"))
            continue
        p = float(stats.chi2.sf(q, df))
        out.append(TestReport(method=method, m=m, statistic=q, p_value=p, df=df,
                              reject_at=_decisions_from_p(p, levels)))
    return out


def weak_portmanteau(fit, cov, m, levels=DEFAULT_LEVELS, acf_set=None):
    """Box-Pierce and Ljung-Box with weighted chi-square (Imhof) p-values.

    ``cov`` must be the :class:`~wfarima.covariance.RhoCovariance` built at
    the same ``m``.
    """
    if cov.m != m:
        raise ValueError(f"covariance built for m={cov.m}, test requested at m={m}")
    eig = np.asarray(cov.eigenvalues, dtype=float)
    if not np.any(eig > 0):
        raise ValueError("all eigenvalues of Sigma_rho are zero")
    a = acf(fit.residuals, m) if acf_set is None else acf_set
    q_bp, q_lb = bp_lb(a)
    out = []
    for method, q in (("bp_weak", q_bp), ("lb_weak", q_lb)):
        p = imhof_tail(eig, q)
        out.append(TestReport(method=method, m=m, statistic=q, p_value=p, eigenvalues=eig,
                              reject_at=_decisions_from_p(p, levels)))
    return out


def sn_matrices(u, psi_hat, acf_set):
    """Self-normalizing matrix ``C_m`` and ``Lambda = (Psi_m | I_m)``.

    ``S_t`` is the running sum of ``Lambda U_j - gamma_m`` and
    ``C_m = n^{-2} sum_t S_t S_t'``.  ``u`` may hold more autocovariance
    columns than ``m = psi_hat.shape[0]``; the extra ones are ignored.

    Returns
    -------
    c_hat : ndarray, shape (m, m)
    lambda_hat : ndarray, shape (m, k + m)
    """
    psi = np.asarray(psi_hat, dtype=float)
    m, k = psi.shape
    values = u.values if hasattr(u, "values") else np.asarray(u, dtype=float)
    if values.shape[1] < k + m:
        raise ValueError(f"U has {values.shape[1]} columns, need at least {k + m}")
    if acf_set.m < m:
        raise ValueError("acf computed for fewer lags than Psi")
    values = values[:, : k + m]
    lam = np.hstack([psi, np.eye(m)])
    n = values.shape[0]
    s = np.cumsum(values @ lam.T - acf_set.gamma[1 : m + 1], axis=0)
    c = s.T @ s / n**2
    return 0.5 * (c + c.T), lam


def _sn_inverse(c):
    vals, vecs = np.linalg.eigh(c)
    top = vals.max()
    if not top > 0 or vals.min() <= top / SN_COND_LIMIT:
        cond = np.inf if vals.min() <= 0 else top / vals.min()
        raise SingularSNMatrix(vals.min(), cond)
    return (vecs / vals) @ vecs.T


def sn_portmanteau(fit, u, psi_hat, m, levels=DEFAULT_LEVELS, table=None, acf_set=None):
    """Self-normalized Box-Pierce and Ljung-Box statistics.

    Parameters
    ----------
    fit : FitResult
    u : UhatSeries
        Built with at least ``m`` autocovariance columns.
    psi_hat : ndarray
        ``Psi`` with at least ``m`` rows; the first ``m`` are used.
    m : int
    levels : sequence of float
        Significance levels; the critical value at level ``a`` is the
        ``1 - a`` quantile of ``U_m``.
    table : LobatoTable, optional
        Defaults to the packaged table.

    Raises
    ------
    SingularSNMatrix
        If ``C_m`` is numerically singular.
    """
    from .lobato import critical_value, default_table

    if table is None:
        table = default_table()
    psi = np.asarray(psi_hat, dtype=float)[:m]
    a = acf(fit.residuals, max(m, 1)) if acf_set is None else acf_set
    c, _ = sn_matrices(u, psi, a)
    c_inv = _sn_inverse(c)
    n = a.n
    rho = a.rho[:m]
    s4 = a.sigma2**2
    d_half = np.sqrt(_lb_factors(n, m))
    q_bp = float(n * s4 * rho @ c_inv @ rho)
    rho_t = d_half * rho
    q_lb = float(n * s4 * rho_t @ c_inv @ rho_t)
    crit = {float(lv): critical_value(table, m, 1.0 - lv) for lv in levels}
    return [
        TestReport(method=method, m=m, statistic=q, critical_value=dict(crit),
                   reject_at={lv: bool(q > cv) for lv, cv in crit.items()})
        for method, q in (("bp_sn", q_bp), ("lb_sn", q_lb))
    ]

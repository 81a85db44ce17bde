"""Strong and weak white-noise generators and GARCH(1,1) moment formulas."""

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "NoiseSpec",
    "Garch2ndOrder",
    "make_rng",
    "generate",
    "garch_fourth_moment_check",
    "garch_second_order",
    "garch_sq_autocov",
]

FAMILIES = ("iid_gaussian", "garch11", "eta_product")
GAUSSIAN_KAPPA = 3.0
DEFAULT_GARCH_BURN = 500


def make_rng(seed, *counter):
    """PCG64 generator keyed by ``seed`` and an optional integer counter path.

    ``make_rng(s, i)`` for distinct ``i`` gives independent streams, which is
    how Monte Carlo replications are seeded.
    """
    seed = int(seed)
    if seed < 0 or seed >= 2**64:
        raise ValueError("seed must be a 64-bit unsigned integer")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, *map(int, counter)])))


@dataclass(frozen=True)
class NoiseSpec:
    """Innovation family plus parameters.

    Only ``garch11`` reads ``omega``, ``alpha1`` and ``beta1``.
    """

    family: str = "iid_gaussian"
    omega: float = 1.0
    alpha1: float = 0.0
    beta1: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown noise family {self.family!r}; expected one of {FAMILIES}")
        if self.family == "garch11":
            if not self.omega > 0:
                raise ValueError("garch11 requires omega > 0")
            if self.alpha1 < 0 or self.beta1 < 0:
                raise ValueError("garch11 requires alpha1 >= 0 and beta1 >= 0")

    @property
    def persistence(self):
        return self.alpha1 + self.beta1

    @property
    def sigma2(self):
        """Unconditional variance of the innovations."""
        if self.family == "iid_gaussian":
            return 1.0
        if self.family == "eta_product":
            # E[eta^4] E[eta^2] for standard Gaussian eta
            return 3.0
        if self.persistence >= 1:
            return np.inf
        return self.omega / (1.0 - self.persistence)

    def with_seed(self, seed):
        return NoiseSpec(self.family, self.omega, self.alpha1, self.beta1, seed)


def _garch_path(eta, omega, alpha1, beta1):
    # Started at the unconditional variance when it exists.
    s2 = omega / (1.0 - alpha1 - beta1) if alpha1 + beta1 < 1 else omega
    prev_e2 = s2
    out = []
    for z in eta.tolist():
        s2 = omega + alpha1 * prev_e2 + beta1 * s2
        e = math.sqrt(s2) * z
        out.append(e)
        prev_e2 = e * e
    return np.array(out)


def generate(spec, n, burn_in=None, rng=None):
    """Draw ``n`` innovations.

    Parameters
    ----------
    spec : NoiseSpec
    n : int
        Number of values returned.
    burn_in : int, optional
        GARCH draws discarded before the returned block.  ``None`` means the
        default stationary start (500 draws) for ``garch11`` and zero for the
        other families.
    rng : numpy.random.Generator, optional
        Overrides ``spec.seed``.

    Returns
    -------
    ndarray of shape (n,)
    """
    n = int(n)
    if n < 1:
        raise ValueError("n must be >= 1")
    if rng is None:
        rng = make_rng(spec.seed)
    if spec.family == "iid_gaussian":
        return rng.standard_normal(n)
    if spec.family == "eta_product":
        eta = rng.standard_normal(n + 1)
        return eta[1:] ** 2 * eta[:-1]
    burn = DEFAULT_GARCH_BURN if burn_in is None else int(burn_in)
    if burn < 0:
        raise ValueError("burn_in must be >= 0")
    eta = rng.standard_normal(n + burn)
    return _garch_path(eta, float(spec.omega), float(spec.alpha1), float(spec.beta1))[burn:]


def garch_fourth_moment_check(spec, kappa=GAUSSIAN_KAPPA):
    """True iff ``kappa alpha1^2 + beta1^2 + 2 alpha1 beta1 < 1``."""
    if spec.family != "garch11":
        raise ValueError("fourth-moment check applies to garch11 only")
    a, b = spec.alpha1, spec.beta1
    return bool(kappa * a * a + b * b + 2 * a * b < 1)


@dataclass(frozen=True)
class Garch2ndOrder:
    """Second-order structure of the squared GARCH(1,1) process."""

    kappa: float
    sigma2: float
    gamma0: float
    gamma1: float
    persistence: float

    def autocov(self, lag):
        lag = np.asarray(lag)
        out = self.gamma1 * self.persistence ** np.maximum(lag - 1, 0).astype(float)
        return np.where(lag == 0, self.gamma0, out)


def garch_second_order(spec, kappa=GAUSSIAN_KAPPA):
    """Variance and lag-one autocovariance of ``eps_t^2``."""
    if not garch_fourth_moment_check(spec, kappa):
        raise ValueError(
            "fourth moment of the GARCH process is infinite "
            f"(kappa alpha1^2 + beta1^2 + 2 alpha1 beta1 >= 1 for {spec})"
        )
    a, b = spec.alpha1, spec.beta1
    s4 = spec.sigma2**2
    den = 1.0 - b * b - 2 * a * b - a * a * kappa
    g1 = (kappa - 1) * (a - a * b * b - a * a * b) / den * s4
    g0 = (kappa - 1) * (1 - b * b - 2 * a * b) / den * s4
    return Garch2ndOrder(kappa=kappa, sigma2=spec.sigma2, gamma0=g0, gamma1=g1, persistence=a + b)


def garch_sq_autocov(spec, lag, kappa=GAUSSIAN_KAPPA):
    """Autocovariance of ``eps_t^2`` at ``lag`` (geometric with ratio ``alpha1 + beta1``)."""
    lag = int(lag)
    if lag < 0:
        raise ValueError("lag must be non-negative")
    return float(garch_second_order(spec, kappa).autocov(lag))

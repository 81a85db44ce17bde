"""FARIMA(p, d, q) estimation and portmanteau diagnostics under weak white noise."""

from .analytic import ClosedFormInputs, c_of_a, closed_sigma_rho
from .covariance import RhoCovariance, rho_covariance
from .diagnose import DiagnosisReport, diagnose
from .estimate import FitResult, fit
from .model import FarimaParams, residual_gradients, residuals, simulate
from .noise import NoiseSpec, generate, make_rng
from .portmanteau import (
    acf,
    bp_lb,
    imhof_tail,
    sn_portmanteau,
    standard_portmanteau,
    weak_portmanteau,
)

__version__ = "0.1.0"

__all__ = [
    "ClosedFormInputs",
    "DiagnosisReport",
    "FarimaParams",
    "FitResult",
    "NoiseSpec",
    "RhoCovariance",
    "acf",
    "bp_lb",
    "c_of_a",
    "closed_sigma_rho",
    "diagnose",
    "fit",
    "generate",
    "imhof_tail",
    "make_rng",
    "residual_gradients",
    "residuals",
    "rho_covariance",
    "simulate",
    "sn_portmanteau",
    "standard_portmanteau",
    "weak_portmanteau",
]

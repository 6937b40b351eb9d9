"""Heteroscedastic James-Stein shrinkage: estimators, risk engines, minimaxity checks."""

from hetshrink.model import (
    CovarianceSpec,
    ShrinkageMatrix,
    berger_g,
    casella_g,
    make_geometric_covariance,
    theta_on_diagonal,
)
from hetshrink.phi import MLE, GeneralizedBayes, SteinForm, phi_eval, phi_prime
from hetshrink.estimator import ShrinkageRule, apply, statistic_z

__all__ = [
    "CovarianceSpec",
    "ShrinkageMatrix",
    "berger_g",
    "casella_g",
    "make_geometric_covariance",
    "theta_on_diagonal",
    "MLE",
    "SteinForm",
    "GeneralizedBayes",
    "phi_eval",
    "phi_prime",
    "ShrinkageRule",
    "apply",
    "statistic_z",
]

__version__ = "0.1.0"

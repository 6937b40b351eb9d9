"""Shrinkage rules ``delta = (I - G phi(z)/z) x`` with ``z = sum g_i x_i^2 / sigma_i^2``."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from hetshrink.model import CovarianceSpec, ShrinkageMatrix, berger_g, casella_g, identity_g
from hetshrink.phi import MLE, GeneralizedBayes, PhiSpec, js_variant, parse_phi


@dataclass(frozen=True)
class ShrinkageRule:
    cov: CovarianceSpec
    G: ShrinkageMatrix
    phi: PhiSpec
    label: str = ""

    def __post_init__(self):
        if self.cov.p != self.G.p:
            raise ValueError(f"Sigma has dimension {self.cov.p} but G has {self.G.p}")

    @property
    def p(self) -> int:
        return self.cov.p

    @property
    def name(self) -> str:
        return self.label or type(self.phi).__name__


@dataclass(frozen=True)
class EstimateResult:
    delta: np.ndarray
    z: float
    factors: np.ndarray
    meta: dict = field(default_factory=dict)


def statistic_z(rule: ShrinkageRule, x) -> np.ndarray | float:
    """``z = x' G Sigma^{-1} x``; accepts one vector or an (n, p) batch."""
    x = np.asarray(x, dtype=float)
    z = (x * x) @ (rule.G.g / rule.cov.sigma2)
    return float(z) if np.ndim(z) == 0 else z


def shrink_ratio(rule: ShrinkageRule, z) -> np.ndarray:
    """``phi(z)/z`` with infinite right limits (c2 = 0 at z = 0) mapped to 0.

    The only way to hit that case is ``x = 0``, where ``delta = 0`` for any
    finite factor.
    """
    r = np.asarray(rule.phi.ratio(z), dtype=float)
    return np.where(np.isfinite(r), r, 0.0)


def shrink_factors(rule: ShrinkageRule, x) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(z, factors)`` for a batch ``x`` of shape (n, p)."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    z = (x * x) @ (rule.G.g / rule.cov.sigma2)
    ratio = shrink_ratio(rule, z)
    return z, 1.0 - ratio[:, None] * rule.G.g[None, :]


def apply(rule: ShrinkageRule, x) -> EstimateResult:
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size != rule.p:
        raise ValueError(f"x has dimension {x.size}, expected {rule.p}")
    if not np.all(np.isfinite(x)):
        raise ValueError("x must be finite")
    z, factors = shrink_factors(rule, x[None, :])
    meta = {}
    if z[0] == 0 and not np.isfinite(rule.phi.ratio(0.0)):
        factors = np.zeros_like(factors)
        meta["singular_at_zero"] = True
    return EstimateResult(delta=factors[0] * x, z=float(z[0]), factors=factors[0], meta=meta)


def estimate_batch(rule: ShrinkageRule, x: np.ndarray) -> np.ndarray:
    _, factors = shrink_factors(rule, x)
    return factors * x


# -- named rules -------------------------------------------------------------


def js_rule(cov: CovarianceSpec) -> ShrinkageRule:
    """``(I - Sigma (p-2) / ((p-2) sigma_1^2 + |x|^2)) x``."""
    return ShrinkageRule(cov, casella_g(cov), js_variant(cov.p), label="JS")


def gb_rule(cov: CovarianceSpec) -> ShrinkageRule:
    return ShrinkageRule(cov, casella_g(cov), GeneralizedBayes(cov.p), label="GB")


def mle_rule(cov: CovarianceSpec) -> ShrinkageRule:
    return ShrinkageRule(cov, casella_g(cov), MLE(), label="MLE")


_G_BUILDERS = {
    "casella": casella_g,
    "berger": berger_g,
    "identity": lambda cov: identity_g(cov.p),
}


def make_rule(name: str, cov: CovarianceSpec, g: str = "casella") -> ShrinkageRule:
    """Build a rule from a short name: ``gb``, ``js``, ``mle`` or ``stein:c1,c2``."""
    try:
        G = _G_BUILDERS[g.lower()](cov)
    except KeyError:
        raise ValueError(f"unknown G choice {g!r}") from None
    phi = parse_phi(name, cov.p)
    return ShrinkageRule(cov, G, phi, label=name.strip().upper() if ":" not in name else name.strip())

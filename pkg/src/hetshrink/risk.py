"""Ordinary and ensemble (Bayes) risk of shrinkage rules.

Ordinary risk ``R(delta, theta) = E|delta(x) - theta|^2`` has two engines:

* ``MC``   -- average loss over ``x ~ N(theta, Sigma)``;
* ``SURE`` -- average Stein unbiased risk estimate over the same law, which is
  far less noisy when the shrinkage effect is tiny.

Ensemble risk ``Rbar(delta, tau)`` (prior ``theta ~ N(0, tau I)``) has three:

* ``DIRECT``    -- draw theta, then x, then average the loss;
* ``RB``        -- integrate theta out through its Gaussian posterior and
  average over the marginal of x only;
* ``DIRICHLET`` -- write ``x_i^2 = w t_i (sigma_i^2 + tau)`` with
  ``w ~ chi2_p`` independent of ``t ~ Dirichlet(1/2, ..., 1/2)`` and average the
  risk-difference functional over (w, t).

Every sampling engine walks the fixed block plan from :mod:`hetshrink.model`
and merges per-block moments in block order, so results do not depend on the
number of worker processes.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from hetshrink.estimator import ShrinkageRule, shrink_factors, shrink_ratio
from hetshrink.model import (
    CovarianceSpec,
    as_mean_vector,
    block_rng,
    block_sizes,
    conditional_block,
    marginal_block,
    stream_key,
)

ENGINES = ("MC", "SURE", "RB", "DIRECT", "DIRICHLET", "CLOSED")


@dataclass(frozen=True)
class RiskEstimate:
    mean: float
    stderr: float
    n: int
    engine: str

    def relative_difference(self, trace: float) -> tuple[float, float]:
        """``(1 - mean/trace, stderr/trace)``."""
        return 1.0 - self.mean / trace, self.stderr / trace

    def combined_stderr(self, other: "RiskEstimate") -> float:
        return float(np.hypot(self.stderr, other.stderr))


@dataclass(frozen=True)
class ProofDecomposition:
    """Batch of ``w ~ chi2_p`` and independent ``t ~ Dirichlet(1/2, ..., 1/2)``."""

    w: np.ndarray
    t: np.ndarray

    def squares(self, tau: float, cov: CovarianceSpec) -> np.ndarray:
        return self.w[:, None] * self.t * (cov.sigma2 + tau)[None, :]


@dataclass
class Moments:
    """Count, mean and centred sum of squares, merged with Chan's update."""

    n: int = 0
    mean: float = 0.0
    m2: float = 0.0

    @classmethod
    def of(cls, values: np.ndarray) -> "Moments":
        values = np.asarray(values, dtype=float)
        if values.size == 0:
            return cls()
        mu = float(np.mean(values))
        dev = values - mu
        return cls(values.size, mu, float(np.dot(dev, dev)))

    def merge(self, other: "Moments") -> "Moments":
        if other.n == 0:
            return self
        if self.n == 0:
            return other
        n = self.n + other.n
        delta = other.mean - self.mean
        mean = self.mean + delta * other.n / n
        m2 = self.m2 + other.m2 + delta * delta * self.n * other.n / n
        return Moments(n, mean, m2)

    def estimate(self, engine: str, shift: float = 0.0) -> RiskEstimate:
        if self.n < 2:
            raise ValueError("need at least two replications")
        var = self.m2 / (self.n - 1)
        return RiskEstimate(self.mean + shift, float(np.sqrt(var / self.n)), self.n, engine)


def _block_moments(job) -> Moments:
    fn, args, seed, key, k, size = job
    return Moments.of(fn(*args, size, block_rng(seed, key, k)))


def run_blocks(
    fn: Callable[..., np.ndarray],
    args: tuple,
    n: int,
    seed: int,
    key: Sequence[int],
    workers: int = 1,
) -> Moments:
    """Evaluate ``fn(*args, size, rng)`` on every block and merge in block order."""
    jobs = [(fn, args, seed, tuple(key), k, size) for k, size in enumerate(block_sizes(n))]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_block_moments, jobs))
    else:
        parts = [_block_moments(job) for job in jobs]
    total = Moments()
    for part in parts:
        total = total.merge(part)
    return total


def _check_n(n: int) -> None:
    if n < 2:
        raise ValueError("n must be >= 2")


def _check_tau(tau: float) -> None:
    if not tau > 0:
        raise ValueError("tau must be positive")


# -- pointwise functionals ---------------------------------------------------


def loss(delta, theta) -> np.ndarray | float:
    """Squared error ``|delta - theta|^2`` along the last axis."""
    delta = np.asarray(delta, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if delta.shape[-1] != theta.shape[-1]:
        raise ValueError("dimension mismatch")
    d = delta - theta
    out = np.sum(d * d, axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def sure_risk_diff(rule: ShrinkageRule, x) -> np.ndarray | float:
    """Unbiased estimate of ``R(delta_phi, theta) - tr(Sigma)`` at observation(s) ``x``.

    With ``r = phi(z)/z`` this is ``-2 sum(g sigma^2) r + sum(g^2 x^2) (r^2 - 4 r')``,
    the usual Stein expansion rewritten so that ``z = 0`` is a removable point.
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    xb = np.atleast_2d(x)
    g, s2 = rule.G.g, rule.cov.sigma2
    z = (xb * xb) @ (g / s2)
    r, dr = rule.phi.ratio_terms(z)
    r = np.asarray(r, dtype=float)
    dr = np.asarray(dr, dtype=float)
    q = (xb * xb) @ (g * g)
    with np.errstate(invalid="ignore"):
        out = -2.0 * float(np.dot(g, s2)) * r + q * (r * r - 4.0 * dr)
    out = np.where(q == 0, 0.0, out) if not np.all(np.isfinite(out)) else out
    return float(out[0]) if single else out


def bayes_rb_values(rule: ShrinkageRule, tau: float, x: np.ndarray) -> np.ndarray:
    """Per-draw Rao-Blackwellized Bayes risk for marginal draws ``x``."""
    s2, g = rule.cov.sigma2, rule.G.g
    post_var = float(np.sum(tau * s2 / (tau + s2)))
    _, factors = shrink_factors(rule, x)
    # (factor_i - 1) x_i + (sigma_i^2 / (tau + sigma_i^2)) x_i
    bias = (s2 / (tau + s2))[None, :] * x - (1.0 - factors) * x
    return post_var + np.sum(bias * bias, axis=1)


def ensemble_functional(rule: ShrinkageRule, tau: float, x2: np.ndarray) -> np.ndarray:
    """Per-draw ``-2 sum(sigma^2 g x^2/(tau+sigma^2)) r + sum(g^2 x^2) r^2`` from squares ``x2``.

    Its expectation under the marginal of x is ``Rbar(delta_phi, tau) - tr(Sigma)``.
    """
    s2, g = rule.cov.sigma2, rule.G.g
    z = x2 @ (g / s2)
    r = shrink_ratio(rule, z)
    lin = x2 @ (s2 * g / (tau + s2))
    quad = x2 @ (g * g)
    return -2.0 * lin * r + quad * r * r


def identity_residual(rule: ShrinkageRule, tau: float, x: np.ndarray) -> np.ndarray:
    """Per-draw gap between the RB value minus ``tr(Sigma)`` and the functional above.

    The two differ by the zero-mean term ``sum sigma^4 (x^2/(tau+s^2)^2 - 1/(tau+s^2))``;
    after removing it the residual is zero up to rounding.
    """
    s2 = rule.cov.sigma2
    x2 = x * x
    zero_mean = (x2 / (tau + s2) ** 2 - 1.0 / (tau + s2)) @ (s2 * s2)
    return bayes_rb_values(rule, tau, x) - rule.cov.trace - ensemble_functional(rule, tau, x2) - zero_mean


def decomposition_from_x(x: np.ndarray, tau: float, cov: CovarianceSpec) -> ProofDecomposition:
    wi = (x * x) / (cov.sigma2 + tau)
    w = wi.sum(axis=1)
    return ProofDecomposition(w, wi / w[:, None])


def sample_decomposition(p: int, size: int, rng: np.random.Generator) -> ProofDecomposition:
    w = rng.chisquare(p, size)
    t = rng.dirichlet(np.full(p, 0.5), size)
    return ProofDecomposition(w, t)


# -- block kernels (module level so they pickle) -----------------------------


def _mc_block(rule, theta, size, rng):
    x = conditional_block(theta, rule.cov, size, rng)
    _, factors = shrink_factors(rule, x)
    d = factors * x - theta
    return np.sum(d * d, axis=1)


def _sure_block(rule, theta, size, rng):
    x = conditional_block(theta, rule.cov, size, rng)
    return sure_risk_diff(rule, x)


def _rb_block(rule, tau, size, rng):
    return bayes_rb_values(rule, tau, marginal_block(tau, rule.cov, size, rng))


def _direct_block(rule, tau, size, rng):
    theta = np.sqrt(tau) * rng.standard_normal((size, rule.p))
    x = theta + rule.cov.sigma * rng.standard_normal((size, rule.p))
    _, factors = shrink_factors(rule, x)
    d = factors * x - theta
    return np.sum(d * d, axis=1)


def _dirichlet_block(rule, tau, size, rng):
    dec = sample_decomposition(rule.p, size, rng)
    return ensemble_functional(rule, tau, dec.squares(tau, rule.cov))


# -- engines -----------------------------------------------------------------


def mc_ordinary_risk(rule: ShrinkageRule, theta, n: int, seed: int, key=None, workers: int = 1) -> RiskEstimate:
    _check_n(n)
    theta = as_mean_vector(theta, rule.p)
    key = stream_key("MC") if key is None else key
    return run_blocks(_mc_block, (rule, theta), n, seed, key, workers).estimate("MC")


def mc_ordinary_risk_sure(
    rule: ShrinkageRule, theta, n: int, seed: int, key=None, workers: int = 1
) -> RiskEstimate:
    _check_n(n)
    theta = as_mean_vector(theta, rule.p)
    key = stream_key("SURE") if key is None else key
    mom = run_blocks(_sure_block, (rule, theta), n, seed, key, workers)
    return mom.estimate("SURE", shift=rule.cov.trace)


def bayes_risk_rb(rule: ShrinkageRule, tau: float, n: int, seed: int, key=None, workers: int = 1) -> RiskEstimate:
    _check_n(n)
    _check_tau(tau)
    key = stream_key("RB") if key is None else key
    return run_blocks(_rb_block, (rule, float(tau)), n, seed, key, workers).estimate("RB")


def bayes_risk_direct(
    rule: ShrinkageRule, tau: float, n: int, seed: int, key=None, workers: int = 1
) -> RiskEstimate:
    _check_n(n)
    _check_tau(tau)
    key = stream_key("DIRECT") if key is None else key
    return run_blocks(_direct_block, (rule, float(tau)), n, seed, key, workers).estimate("DIRECT")


def bayes_risk_dirichlet_oracle(
    rule: ShrinkageRule, tau: float, n: int, seed: int, key=None, workers: int = 1
) -> RiskEstimate:
    _check_n(n)
    _check_tau(tau)
    key = stream_key("DIRICHLET") if key is None else key
    mom = run_blocks(_dirichlet_block, (rule, float(tau)), n, seed, key, workers)
    return mom.estimate("DIRICHLET", shift=rule.cov.trace)


def posterior_mean_bayes_risk(tau: float, cov: CovarianceSpec) -> RiskEstimate:
    """Exact Bayes risk ``sum tau sigma^2 / (tau + sigma^2)`` of the posterior mean."""
    _check_tau(tau)
    s2 = cov.sigma2
    return RiskEstimate(float(np.sum(tau * s2 / (tau + s2))), 0.0, 0, "CLOSED")


ORDINARY_ENGINES = {"MC": mc_ordinary_risk, "SURE": mc_ordinary_risk_sure}
BAYES_ENGINES = {
    "RB": bayes_risk_rb,
    "DIRECT": bayes_risk_direct,
    "DIRICHLET": bayes_risk_dirichlet_oracle,
}

"""Checkers for the ordinary and ensemble minimaxity conditions.

Reports carry a ``method`` tag: ``ANALYTIC`` verdicts follow from closed-form
inequalities, ``GRID`` verdicts are evidence from evaluating the slack on a
finite grid (plus the analytic endpoint limits) and are not proofs.
Margins are divided by ``2(p-2)`` so they are comparable across dimensions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy import integrate

from hetshrink.model import CovarianceSpec, ShrinkageMatrix, casella_g
from hetshrink.phi import PhiSpec, SteinForm

ROUNDING_TOL = 1e-12


@dataclass(frozen=True)
class ConditionReport:
    holds: bool
    margin: float
    witness: Any = None
    method: str = "ANALYTIC"
    valid: bool = True
    message: str = ""
    label: str = ""
    details: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ShapeReport:
    """Grid evidence for the shape assumptions on phi."""

    nonnegative: bool
    nondecreasing: bool
    concave: bool
    ratio_nonincreasing: bool
    worst: dict

    @property
    def ok(self) -> bool:
        return self.nonnegative and self.nondecreasing and self.concave and self.ratio_nonincreasing


def default_z_grid(n: int = 200, lo: float = 1e-4, hi: float = 1e6) -> np.ndarray:
    return np.geomspace(lo, hi, n)


def default_tau_grid(cov: CovarianceSpec, n: int = 200) -> np.ndarray:
    """Log grid over ``[1e-4 sigma_p^2, 1e4 sigma_1^2]``."""
    return np.geomspace(1e-4 * cov.sigma2[-1], 1e4 * cov.sigma2[0], n)


def _snap(x: float) -> float:
    return 0.0 if abs(x) < ROUNDING_TOL else float(x)


def shape_check(spec: PhiSpec, z_grid=None) -> ShapeReport:
    """Check non-negativity, monotonicity, concavity and decreasing phi/z on a grid.

    Differences are compared against a rounding allowance so that values
    pinned at the floating-point limit (phi* == p-2 for large z) do not count
    as violations.
    """
    z = default_z_grid() if z_grid is None else np.asarray(z_grid, dtype=float)
    v = np.asarray(spec.value(z), dtype=float)
    r = np.asarray(spec.ratio(z), dtype=float)
    eps = 8 * np.finfo(float).eps
    scale = max(1.0, float(np.max(np.abs(v))))
    dv = np.diff(v)
    dz = np.diff(z)
    slopes = dv / dz
    slope_tol = eps * scale / dz
    dslope = np.diff(slopes)
    worst = {
        "min_value": float(v.min()),
        "min_increment": float(dv.min()),
        "max_slope_increase": float((dslope - slope_tol[1:] - slope_tol[:-1]).max(initial=-np.inf)),
        "max_ratio_increase": float(np.diff(r).max()),
    }
    return ShapeReport(
        nonnegative=bool(np.all(v >= 0)),
        nondecreasing=bool(np.all(dv >= -eps * scale)),
        concave=bool(np.all(dslope <= slope_tol[1:] + slope_tol[:-1])),
        ratio_nonincreasing=bool(np.all(np.diff(r) <= eps * np.abs(r[:-1]))),
        worst=worst,
    )


def h_value(cov: CovarianceSpec, G: ShrinkageMatrix) -> float:
    """Ordinary-minimax budget ``2 (sum g_i s_i^2 / max g_i s_i^2 - 2)``."""
    gs = G.g * cov.sigma2
    return 2.0 * (float(np.sum(gs)) / float(np.max(gs)) - 2.0)


def ordinary_minimax_check(spec: PhiSpec, cov: CovarianceSpec, G: ShrinkageMatrix, z_grid=None) -> ConditionReport:
    """Sufficient condition: phi >= 0 non-decreasing and ``sup phi <= h(Sigma, G)``."""
    p = cov.p
    h = h_value(cov, G)
    shape = shape_check(spec, z_grid)
    details = {"h": h, "sup_phi": spec.sup, "shape_grid_ok": shape.nonnegative and shape.nondecreasing}
    margin = _snap((h - spec.sup) / (2 * (p - 2)))
    if h <= 0:
        return ConditionReport(
            False, margin, method="ANALYTIC", message="h <= 0: no nontrivial phi admissible",
            label="ordinary", details=details,
        )
    if not (shape.nonnegative and shape.nondecreasing):
        return ConditionReport(
            False, margin, method="GRID", valid=False,
            message="phi is not non-negative and non-decreasing on the grid",
            label="ordinary", details=details,
        )
    return ConditionReport(margin >= 0, margin, method="ANALYTIC", label="ordinary", details=details)


def _shape_precondition(spec: PhiSpec, label: str) -> ConditionReport | None:
    shape = shape_check(spec)
    if shape.ok:
        return None
    return ConditionReport(
        False, float("nan"), method="GRID", valid=False, label=label,
        message="phi fails the shape assumptions (non-negative, non-decreasing, concave, phi/z non-increasing)",
        details={"shape": shape.worst},
    )


def _grid_report(slack: np.ndarray, taus: np.ndarray, ends: tuple[float, float], p: int, label: str) -> ConditionReport:
    vals = np.concatenate([[ends[0]], slack, [ends[1]]]) / (2 * (p - 2))
    where = np.concatenate([[0.0], taus, [np.inf]])
    k = int(np.argmin(vals))
    margin = _snap(float(vals[k]))
    return ConditionReport(
        margin >= 0, margin, witness=float(where[k]), method="GRID", label=label,
        details={"slack": vals[1:-1], "tau": taus, "limit_tau0": vals[0], "limit_tau_inf": vals[-1]},
    )


def ensemble_condition_general(
    spec: PhiSpec, cov: CovarianceSpec, G: ShrinkageMatrix, tau_grid=None
) -> ConditionReport:
    """Slack of ``phi(p min_i k_i) <= 2(p-2) min_i k_i / max_i k_i`` with ``k_i = g_i (1 + tau/s_i^2)``."""
    bad = _shape_precondition(spec, "ensemble-general")
    if bad is not None:
        return bad
    p = cov.p
    taus = default_tau_grid(cov) if tau_grid is None else np.asarray(tau_grid, dtype=float)
    g, s2 = G.g, cov.sigma2
    k = g[None, :] * (1.0 + taus[:, None] / s2[None, :])
    kmin, kmax = k.min(axis=1), k.max(axis=1)
    slack = 2 * (p - 2) * kmin / kmax - np.asarray(spec.value(p * kmin), dtype=float)
    at0 = 2 * (p - 2) * g.min() / g.max() - float(spec.value(p * g.min()))
    q = g / s2
    at_inf = 2 * (p - 2) * q.min() / q.max() - spec.sup
    return _grid_report(slack, taus, (at0, at_inf), p, "ensemble-general")


def ensemble_condition_casella(spec: PhiSpec, cov: CovarianceSpec, tau_grid=None) -> ConditionReport:
    """Slack of ``phi(p (s_p^2 + tau)/s_1^2) <= 2(p-2)(s_p^2 + tau)/(s_1^2 + tau)``."""
    bad = _shape_precondition(spec, "ensemble-casella")
    if bad is not None:
        return bad
    p = cov.p
    s1, sp = cov.sigma2[0], cov.sigma2[-1]
    taus = default_tau_grid(cov) if tau_grid is None else np.asarray(tau_grid, dtype=float)
    slack = 2 * (p - 2) * (sp + taus) / (s1 + taus) - np.asarray(spec.value(p * (sp + taus) / s1), dtype=float)
    at0 = 2 * (p - 2) * sp / s1 - float(spec.value(p * sp / s1))
    at_inf = 2 * (p - 2) - spec.sup
    return _grid_report(slack, taus, (at0, at_inf), p, "ensemble-casella")


def stein_form_ensemble_analytic(c1: float, c2: float, cov: CovarianceSpec) -> ConditionReport:
    """Exact verdict for ``phi = c1 z/(c2+z)`` with ``G = Sigma/sigma_1^2``.

    The condition is affine in tau, ``p tau (2(p-2) - c1) + 2(p-2) s_1^2 (c2 - p(c1/(2(p-2)) - s_p^2/s_1^2))``,
    so it holds for all tau > 0 iff both coefficients are non-negative.
    """
    if not c1 > 0 or not c2 >= 0:
        raise ValueError("need c1 > 0 and c2 >= 0")
    p = cov.p
    budget = 2 * (p - 2)
    ratio = cov.sigma2[-1] / cov.sigma2[0]
    slope = _snap((budget - c1) / budget)
    intercept = _snap((c2 - p * (c1 / budget - ratio)) / budget)
    margin = min(slope, intercept)
    witness = "tau-slope" if slope <= intercept else "intercept"
    return ConditionReport(
        margin >= 0, margin, witness=witness, method="ANALYTIC", label="ensemble-stein",
        details={"slope_slack": slope, "intercept_slack": intercept},
    )


def ensemble_check(spec: PhiSpec, cov: CovarianceSpec, G: ShrinkageMatrix | None = None, tau_grid=None) -> ConditionReport:
    """Best available ensemble verdict: exact for Stein-form with Casella G, grid otherwise."""
    G = casella_g(cov) if G is None else G
    is_casella = np.allclose(G.g, cov.sigma2 / cov.sigma2[0], rtol=0, atol=1e-15)
    if isinstance(spec, SteinForm) and is_casella:
        return stein_form_ensemble_analytic(spec.c1, spec.c2, cov)
    if is_casella:
        return ensemble_condition_casella(spec, cov, tau_grid)
    return ensemble_condition_general(spec, cov, G, tau_grid)


def minimax_threshold_a(p: int, lo: float = 1.0, hi: float = 2.0, tol: float = 1e-6) -> float:
    """Root in ``a`` of ``2 (sum_i a^{2(i-p)} - 2) = p - 2`` by bisection.

    Left of the root the geometric spectrum satisfies the ordinary-minimax
    condition for any phi bounded by p-2 under ``G = Sigma/sigma_1^2``.
    """
    if p < 3:
        raise ValueError("p must be >= 3")

    def excess(a: float) -> float:
        k = np.arange(p, dtype=float)
        return 2.0 * (float(np.sum(a ** (-2.0 * k))) - 2.0) - (p - 2)

    f_lo, f_hi = excess(lo), excess(hi)
    if f_lo * f_hi > 0:
        raise ValueError(f"no sign change on [{lo}, {hi}] for p={p}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        f_mid = excess(mid)
        if f_mid == 0:
            return mid
        if (f_mid > 0) == (f_lo > 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def z_ratio_bound_check(cov: CovarianceSpec, G: ShrinkageMatrix, x) -> bool:
    """``z / sum g_i^2 x_i^2 >= 1 / max_i g_i s_i^2`` (up to 1e-12)."""
    x = np.asarray(x, dtype=float)
    q = float(np.sum(G.g**2 * x**2))
    if q == 0:
        raise ValueError("x must be non-zero")
    z = float(np.sum(G.g * x**2 / cov.sigma2))
    return z / q >= 1.0 / float(np.max(G.g * cov.sigma2)) - 1e-12


def harmonic_mixture_density(p: int, r: float) -> float:
    """Density at ``|theta| = r`` of the lambda-mixture with ``Sigma = G = I``, by quadrature."""
    if r <= 0:
        raise ValueError("theta = 0 is excluded (density is singular there)")

    # lambda = u^2 removes the lambda^{p/2-2} endpoint singularity when p = 3.
    def integrand(u):
        lam = u * u
        if lam >= 1.0:
            return 0.0
        expo = -lam * r * r / (2.0 * (1.0 - lam))
        return 2.0 * u * (lam / (1.0 - lam)) ** (p / 2) * math.exp(expo) / (lam * lam)

    pieces = [0.0, 0.5, 0.9, 0.99, 1.0]
    total = 0.0
    for a, b in zip(pieces[:-1], pieces[1:]):
        val, _ = integrate.quad(integrand, a, b, epsabs=0.0, epsrel=1e-13, limit=400)
        total += val
    return total / (2 * math.pi) ** (p / 2)


def harmonic_prior_closed_form(p: int, r: float) -> float:
    return math.gamma(p / 2 - 1) * 2 ** (p / 2 - 1) / (2 * math.pi) ** (p / 2) * r ** (2 - p)


def harmonic_prior_identity_check(p: int, theta_norms=(0.5, 1.0, 2.0, 4.0)) -> float:
    """Max relative deviation between the mixture density and ``C_p |theta|^{2-p}``."""
    if p < 3:
        raise ValueError("p must be >= 3")
    dev = 0.0
    for r in theta_norms:
        num = harmonic_mixture_density(p, float(r))
        ref = harmonic_prior_closed_form(p, float(r))
        dev = max(dev, abs(num / ref - 1.0))
    return dev


def standard_conditions(spec: PhiSpec, cov: CovarianceSpec) -> tuple[ConditionReport, ConditionReport]:
    """(ordinary, ensemble) reports under ``G = Sigma / sigma_1^2``."""
    G = casella_g(cov)
    return ordinary_minimax_check(spec, cov, G), ensemble_check(spec, cov, G)


__all__ = [
    "ConditionReport",
    "ShapeReport",
    "default_tau_grid",
    "default_z_grid",
    "ensemble_check",
    "ensemble_condition_casella",
    "ensemble_condition_general",
    "h_value",
    "harmonic_prior_identity_check",
    "minimax_threshold_a",
    "ordinary_minimax_check",
    "shape_check",
    "standard_conditions",
    "stein_form_ensemble_analytic",
    "z_ratio_bound_check",
]

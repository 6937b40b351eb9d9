"""Shrinkage profiles phi(z) and the truncated-gamma integrals behind phi*.

Three profiles are supported:

* :class:`MLE` -- ``phi = 0`` (no shrinkage).
* :class:`SteinForm` -- ``phi(z) = c1 z / (c2 + z)``.
* :class:`GeneralizedBayes` -- ``phi*(z) = z N(z) / D(z)`` where
  ``N = I(p/2 - 1, z)``, ``D = I(p/2 - 2, z)`` and

  .. math:: I(a, z) = \\int_0^1 \\lambda^a e^{-z\\lambda/2} d\\lambda .

``I`` is evaluated by a power series for tiny ``z``, by adaptive Gauss-Legendre
quadrature after the substitution ``lambda = u**2`` in the middle range, and by
upward recurrence from a closed-form base for large ``z`` (when ``2a`` is an
integer, which covers every integer ``p``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.special import erf

SERIES_MAX_Z = 1e-3
RECURRENCE_MIN_Z = 50.0
LIMIT_MIN_Z = 1e8
QUAD_RTOL = 1e-10

_SERIES_TERMS = 12
_GL_X, _GL_W = np.polynomial.legendre.leggauss(20)
_QUAD_CHUNK = 4096
_QUAD_MAX_DEPTH = 40


# -- truncated gamma integral ------------------------------------------------


def _as_nonneg(z) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    if np.any(np.isnan(z)) or np.any(z < 0):
        raise ValueError("z must be >= 0")
    return z


def _series(a: float, z: np.ndarray) -> np.ndarray:
    # sum_k (-z/2)^k / (k! (a + k + 1))
    out = np.zeros_like(z)
    term = np.ones_like(z)
    for k in range(_SERIES_TERMS):
        out += term / (a + k + 1)
        term = term * (-0.5 * z) / (k + 1)
    return out


def _recurrence(a: float, z: np.ndarray) -> np.ndarray:
    steps = int(math.ceil(a))
    a0 = a - steps
    e = np.exp(-0.5 * z)
    if a0 == 0.0:
        val = (2.0 / z) * (-np.expm1(-0.5 * z))
    else:  # a0 == -1/2
        val = np.sqrt(2.0 * np.pi / z) * erf(np.sqrt(0.5 * z))
    for j in range(1, steps + 1):
        val = -(2.0 / z) * e + (2.0 * (a0 + j) / z) * val
    return val


def _panel(lo: float, hi: float, powers: np.ndarray, z: np.ndarray) -> np.ndarray:
    half = 0.5 * (hi - lo)
    u = (lo + hi) * 0.5 + half * _GL_X
    ez = np.exp(-0.5 * np.outer(z, u * u))
    up = (u[None, :] ** powers[:, None]) * (2.0 * half * _GL_W)
    return up @ ez.T


def _quadrature(exponents: np.ndarray, z: np.ndarray, rtol: float) -> np.ndarray:
    """Integrate ``2 u^(2a+1) exp(-z u^2 / 2)`` over [0, 1] for every (a, z) pair.

    Panels are shared by the whole batch and bisected until the two-halves
    estimate agrees with the whole-panel estimate for every member.
    """
    powers = 2.0 * exponents + 1.0
    coarse = sum(_panel(k / 4, (k + 1) / 4, powers, z) for k in range(4))
    budget = 0.1 * rtol * np.abs(coarse) + 1e-300

    total = np.zeros_like(coarse)
    stack = [(0.0, 1.0, _panel(0.0, 1.0, powers, z), 0)]
    while stack:
        lo, hi, whole, depth = stack.pop()
        mid = 0.5 * (lo + hi)
        left = _panel(lo, mid, powers, z)
        right = _panel(mid, hi, powers, z)
        if np.all(np.abs(left + right - whole) <= budget * (hi - lo)) or depth >= _QUAD_MAX_DEPTH:
            total += left + right
        else:
            stack.append((mid, hi, right, depth + 1))
            stack.append((lo, mid, left, depth + 1))
    return total


def _integrals(exponents, z: np.ndarray, rtol: float = QUAD_RTOL) -> np.ndarray:
    """``I(a, z)`` for each exponent ``a`` over a flat array ``z``; shape (k, n)."""
    exponents = np.asarray(exponents, dtype=float)
    out = np.empty((exponents.size, z.size))
    small = z < SERIES_MAX_Z
    half_int = np.all(np.abs(2.0 * exponents - np.round(2.0 * exponents)) == 0)
    large = (z > RECURRENCE_MIN_Z) if half_int else np.zeros_like(small)
    mid = ~(small | large)

    if small.any():
        for i, a in enumerate(exponents):
            out[i, small] = _series(a, z[small])
    if large.any():
        for i, a in enumerate(exponents):
            out[i, large] = _recurrence(a, z[large])
    if mid.any():
        idx = np.flatnonzero(mid)
        for start in range(0, idx.size, _QUAD_CHUNK):
            sel = idx[start : start + _QUAD_CHUNK]
            out[:, sel] = _quadrature(exponents, z[sel], rtol)
    return out


def incomplete_integral(a: float, z):
    """Return ``int_0^1 lambda^a exp(-z lambda / 2) d lambda`` for ``a > -1``, ``z >= 0``.

    Accepts scalar or array ``z``; relative accuracy is about 1e-10.
    """
    if not a > -1:
        raise ValueError(f"exponent a={a} must exceed -1")
    z = _as_nonneg(z)
    flat = z.reshape(-1)
    res = _integrals([a], flat)[0].reshape(z.shape)
    return float(res) if res.ndim == 0 else res


# -- profiles ----------------------------------------------------------------


def _shape_like(z: np.ndarray, res: np.ndarray):
    res = res.reshape(z.shape)
    return float(res) if res.ndim == 0 else res


@dataclass(frozen=True)
class MLE:
    """Zero shrinkage; the estimator is ``x`` itself."""

    name = "MLE"

    @property
    def sup(self) -> float:
        return 0.0

    def value(self, z):
        z = _as_nonneg(z)
        return _shape_like(z, np.zeros(z.shape))

    def derivative(self, z):
        return self.value(z)

    def ratio(self, z):
        return self.value(z)

    def ratio_derivative(self, z):
        return self.value(z)

    def ratio_terms(self, z):
        return self.ratio(z), self.ratio_derivative(z)


@dataclass(frozen=True)
class SteinForm:
    """``phi(z) = c1 z / (c2 + z)`` with ``c1 > 0``, ``c2 >= 0``."""

    c1: float
    c2: float = 0.0
    name = "SteinForm"

    def __post_init__(self):
        if not self.c1 > 0:
            raise ValueError("c1 must be positive")
        if not self.c2 >= 0:
            raise ValueError("c2 must be non-negative")

    @property
    def sup(self) -> float:
        return float(self.c1)

    def value(self, z):
        z = _as_nonneg(z)
        if self.c2 == 0:
            return _shape_like(z, np.full(z.shape, float(self.c1)))
        return _shape_like(z, self.c1 * z / (self.c2 + z))

    def derivative(self, z):
        z = _as_nonneg(z)
        if self.c2 == 0:
            return _shape_like(z, np.zeros(z.shape))
        return _shape_like(z, self.c1 * self.c2 / (self.c2 + z) ** 2)

    def ratio(self, z):
        """``phi(z) / z``; at z=0 the right limit (infinite when c2 = 0)."""
        z = _as_nonneg(z)
        with np.errstate(divide="ignore"):
            denom = self.c2 + z
            res = np.where(denom > 0, self.c1 / np.where(denom > 0, denom, 1.0), np.inf)
        return _shape_like(z, res)

    def ratio_derivative(self, z):
        """``d/dz [phi(z)/z] = -c1 / (c2 + z)^2``."""
        z = _as_nonneg(z)
        with np.errstate(divide="ignore"):
            res = -self.c1 / (self.c2 + z) ** 2
        return _shape_like(z, res)

    def ratio_terms(self, z):
        return self.ratio(z), self.ratio_derivative(z)


@dataclass(frozen=True)
class GeneralizedBayes:
    """``phi*`` of the generalized harmonic prior in dimension ``p``."""

    p: int
    name = "GeneralizedBayes"

    def __post_init__(self):
        if int(self.p) != self.p or self.p < 3:
            raise ValueError("p must be an integer >= 3")

    @property
    def sup(self) -> float:
        return float(self.p - 2)

    def _nd(self, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        n_int, d_int = _integrals([self.p / 2 - 1, self.p / 2 - 2], z)
        return n_int, d_int

    def value(self, z):
        z = _as_nonneg(z)
        flat = z.reshape(-1)
        res = np.full(flat.shape, self.sup)
        work = flat < LIMIT_MIN_Z
        if work.any():
            zw = flat[work]
            n_int, d_int = self._nd(zw)
            tail = zw > RECURRENCE_MIN_Z
            # phi* = (p-2) - 2 e^{-z/2} / D, from one integration by parts of N
            res[work] = np.where(
                tail, self.sup - 2.0 * np.exp(-0.5 * zw) / d_int, zw * n_int / d_int
            )
        return _shape_like(z, res)

    def log_gap(self, z):
        """``log((p-2) - phi*(z)) = log 2 - z/2 - log D``.

        Resolves the approach to the limit long after ``value`` has rounded to
        ``p - 2``, so strict monotonicity stays observable at large z.
        """
        z = _as_nonneg(z)
        flat = z.reshape(-1)
        (d_int,) = _integrals([self.p / 2 - 2], flat)
        return _shape_like(z, math.log(2.0) - 0.5 * flat - np.log(d_int))

    def derivative(self, z):
        z = _as_nonneg(z)
        flat = z.reshape(-1)
        res = np.zeros(flat.shape)
        work = flat < LIMIT_MIN_Z
        if work.any():
            zw = flat[work]
            n_int, d_int = self._nd(zw)
            res[work] = np.exp(-0.5 * zw) / d_int * (1.0 - n_int / d_int)
        return _shape_like(z, res)

    def ratio(self, z):
        """``phi*(z) / z = N / D``; equals ``(p-2)/p`` at z=0."""
        z = _as_nonneg(z)
        flat = z.reshape(-1)
        n_int, d_int = self._nd(flat)
        return _shape_like(z, n_int / d_int)

    def ratio_derivative(self, z):
        """``d/dz (N/D) = (N^2 - M D) / (2 D^2)`` with ``M = I(p/2, z)``."""
        z = _as_nonneg(z)
        flat = z.reshape(-1)
        n_int, d_int, m_int = _integrals([self.p / 2 - 1, self.p / 2 - 2, self.p / 2], flat)
        return _shape_like(z, (n_int**2 - m_int * d_int) / (2.0 * d_int**2))

    def ratio_terms(self, z):
        """``(phi/z, d/dz phi/z)`` from a single pass over the three integrals."""
        z = _as_nonneg(z)
        flat = z.reshape(-1)
        n_int, d_int, m_int = _integrals([self.p / 2 - 1, self.p / 2 - 2, self.p / 2], flat)
        ratio = n_int / d_int
        slope = (n_int**2 - m_int * d_int) / (2.0 * d_int**2)
        return _shape_like(z, ratio), _shape_like(z, slope)

    def derivative_quotient_rule(self, z):
        """``N/D - (z/2)(M D - N^2)/D^2``; same quantity as :meth:`derivative`.

        Loses relative accuracy for large z by cancellation; kept as a check.
        """
        z = _as_nonneg(z)
        flat = z.reshape(-1)
        n_int, d_int, m_int = _integrals([self.p / 2 - 1, self.p / 2 - 2, self.p / 2], flat)
        res = n_int / d_int - 0.5 * flat * (m_int * d_int - n_int**2) / d_int**2
        return _shape_like(z, res)


PhiSpec = Union[MLE, SteinForm, GeneralizedBayes]


def phi_eval(spec: PhiSpec, z):
    return spec.value(z)


def phi_prime(spec: PhiSpec, z):
    return spec.derivative(z)


def phi_over_z(spec: PhiSpec, z):
    """``phi(z)/z`` with the removable singularity at 0 replaced by its right limit."""
    return spec.ratio(z)


def js_variant(p: int) -> SteinForm:
    """``c1 = c2 = p - 2``: the James-Stein variant with non-negative factors."""
    return SteinForm(float(p - 2), float(p - 2))


def parse_phi(text: str, p: int) -> PhiSpec:
    """Parse ``mle``, ``gb``, ``js`` or ``stein:c1,c2`` into a profile."""
    key = text.strip().lower()
    if key == "mle":
        return MLE()
    if key == "gb":
        return GeneralizedBayes(p)
    if key == "js":
        return js_variant(p)
    if key.startswith("stein:"):
        parts = key.split(":", 1)[1].split(",")
        if len(parts) != 2:
            raise ValueError(f"bad Stein-form spec {text!r}; expected stein:c1,c2")
        return SteinForm(float(parts[0]), float(parts[1]))
    raise ValueError(f"unknown phi {text!r}")

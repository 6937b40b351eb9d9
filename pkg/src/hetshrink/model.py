"""Problem setup: diagonal covariances, shrinkage matrices and Gaussian sampling.

Every covariance and shrinkage matrix here is diagonal and stored as a vector.

Sampling is organised in fixed-size blocks.  Block ``k`` of a stream draws from
its own Philox generator keyed by ``(seed, key, k)``, so a stream is a pure
function of the master seed and never depends on how blocks are spread over
workers.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

BLOCK_SIZE = 1 << 16
_SEED_MASK = (1 << 64) - 1


def _frozen(values, name: str) -> np.ndarray:
    arr = np.array(values, dtype=float).reshape(-1)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class CovarianceSpec:
    """Diagonal covariance ``diag(sigma2)`` with non-increasing variances, p >= 3."""

    sigma2: np.ndarray

    def __post_init__(self):
        s2 = _frozen(self.sigma2, "sigma2")
        if s2.size < 3:
            raise ValueError(f"dimension p={s2.size} < 3")
        if np.any(s2 <= 0):
            raise ValueError("variances must be positive")
        if np.any(np.diff(s2) > 0):
            raise ValueError("variances must be non-increasing")
        object.__setattr__(self, "sigma2", s2)

    @property
    def p(self) -> int:
        return self.sigma2.size

    @property
    def trace(self) -> float:
        return float(self.sigma2.sum())

    @property
    def sigma(self) -> np.ndarray:
        return np.sqrt(self.sigma2)

    def __eq__(self, other):
        return isinstance(other, CovarianceSpec) and np.array_equal(self.sigma2, other.sigma2)

    def __hash__(self):
        return hash(self.sigma2.tobytes())


@dataclass(frozen=True, eq=False)
class ShrinkageMatrix:
    """Diagonal ``G = diag(g)`` with ``0 < g_i <= 1``."""

    g: np.ndarray

    def __post_init__(self):
        g = _frozen(self.g, "g")
        if np.any(g <= 0) or np.any(g > 1):
            raise ValueError("shrinkage weights must lie in (0, 1]")
        object.__setattr__(self, "g", g)

    @property
    def p(self) -> int:
        return self.g.size

    def __eq__(self, other):
        return isinstance(other, ShrinkageMatrix) and np.array_equal(self.g, other.g)

    def __hash__(self):
        return hash(self.g.tobytes())


@dataclass(frozen=True)
class ExperimentPoint:
    """Signal multiplier ``m`` (ordinary risk) and prior variance ``tau`` (ensemble risk)."""

    m: float = 0.0
    tau: float = 1.0

    def __post_init__(self):
        if not self.m >= 0:
            raise ValueError("m must be non-negative")
        if not self.tau > 0:
            raise ValueError("tau must be positive")


def make_geometric_covariance(p: int, a: float) -> CovarianceSpec:
    """Return ``diag(a**(p-1), ..., a, 1)``."""
    if p < 3:
        raise ValueError(f"p={p} < 3")
    if not a >= 1:
        raise ValueError(f"a={a} < 1")
    return CovarianceSpec(float(a) ** np.arange(p - 1, -1, -1, dtype=float))


def casella_g(cov: CovarianceSpec) -> ShrinkageMatrix:
    """``G = Sigma / sigma_1^2``: more shrinkage on the noisier coordinates."""
    return ShrinkageMatrix(cov.sigma2 / cov.sigma2[0])


def berger_g(cov: CovarianceSpec) -> ShrinkageMatrix:
    """``G = sigma_p^2 Sigma^{-1}``, the maximiser of the ordinary-minimax budget."""
    return ShrinkageMatrix(cov.sigma2[-1] / cov.sigma2)


def identity_g(p: int) -> ShrinkageMatrix:
    return ShrinkageMatrix(np.ones(p))


def theta_on_diagonal(m: float, cov: CovarianceSpec) -> np.ndarray:
    """Mean along ``1_p / sqrt(p)`` with squared norm ``m**2 * tr(Sigma)``."""
    if not m >= 0:
        raise ValueError("m must be non-negative")
    theta = np.full(cov.p, m * np.sqrt(cov.trace / cov.p))
    theta.setflags(write=False)
    return theta


def as_mean_vector(theta, p: int) -> np.ndarray:
    arr = np.asarray(theta, dtype=float).reshape(-1)
    if arr.size != p:
        raise ValueError(f"mean has dimension {arr.size}, expected {p}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("mean must be finite")
    return arr


# -- seeding -----------------------------------------------------------------


def _key_word(part) -> int:
    if isinstance(part, (int, np.integer)) and not isinstance(part, bool):
        return int(part) & _SEED_MASK
    digest = hashlib.blake2b(repr(part).encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def stream_key(*parts) -> tuple[int, ...]:
    """Map arbitrary labels (names, floats, ints) to a stable integer key."""
    return tuple(_key_word(part) for part in parts)


def block_rng(seed: int, key: Sequence[int], block: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed) & _SEED_MASK, spawn_key=(*key, int(block)))
    return np.random.Generator(np.random.Philox(ss))


def block_sizes(n: int, block_size: int = BLOCK_SIZE) -> list[int]:
    if n < 1:
        raise ValueError("n must be >= 1")
    full, rest = divmod(n, block_size)
    return [block_size] * full + ([rest] if rest else [])


# -- samplers ----------------------------------------------------------------


def conditional_block(theta, cov: CovarianceSpec, size: int, rng: np.random.Generator) -> np.ndarray:
    return theta + cov.sigma * rng.standard_normal((size, cov.p))


def marginal_block(tau: float, cov: CovarianceSpec, size: int, rng: np.random.Generator) -> np.ndarray:
    return np.sqrt(cov.sigma2 + tau) * rng.standard_normal((size, cov.p))


def sample_conditional(
    theta, cov: CovarianceSpec, n: int, seed: int, key: Sequence[int] = ()
) -> Iterator[np.ndarray]:
    """Yield blocks of i.i.d. draws ``x ~ N_p(theta, Sigma)``, ``n`` rows in total."""
    theta = as_mean_vector(theta, cov.p)
    for k, size in enumerate(block_sizes(n)):
        yield conditional_block(theta, cov, size, block_rng(seed, key, k))


def sample_marginal(
    tau: float, cov: CovarianceSpec, n: int, seed: int, key: Sequence[int] = ()
) -> Iterator[np.ndarray]:
    """Yield blocks of draws from the marginal ``x_i ~ N(0, sigma_i^2 + tau)``."""
    if not tau > 0:
        raise ValueError("tau must be positive")
    for k, size in enumerate(block_sizes(n)):
        yield marginal_block(tau, cov, size, block_rng(seed, key, k))


def collect(blocks: Iterator[np.ndarray]) -> np.ndarray:
    return np.concatenate(list(blocks), axis=0)

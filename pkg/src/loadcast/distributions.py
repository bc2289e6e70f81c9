"""Lognormal distribution arithmetic.

Every forecast the library emits is a lognormal parameterized in log space by
(mu, sigma) of the underlying normal. Median, mean, density, negative
log-likelihood and the +/- one-sigma quantile bounds all have closed forms;
sampling uses the exp-of-normal construction with an explicit seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .util import child_rng

LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)

# Quantile levels of the +/- one-sigma band of the underlying normal.
LOWER_BAND_QUANTILE = 0.15865
UPPER_BAND_QUANTILE = 0.84135


@dataclass(frozen=True)
class LognormalParams:
    """Log-space location and scale; ``sigma`` must be strictly positive."""

    mu: float
    sigma: float

    def __post_init__(self):
        if not (math.isfinite(self.mu) and math.isfinite(self.sigma)):
            raise DomainError(f"non-finite lognormal parameters ({self.mu}, {self.sigma})")
        if self.sigma <= 0:
            raise DomainError(f"sigma must be > 0, got {self.sigma}")


def pdf(p: LognormalParams, z: float) -> float:
    """Density at z > 0."""
    if z <= 0:
        raise DomainError(f"lognormal density undefined at z={z}")
    u = (math.log(z) - p.mu) / p.sigma
    return math.exp(-0.5 * u * u) / (math.sqrt(2.0 * math.pi) * p.sigma * z)


def nll(p: LognormalParams, y: float) -> float:
    """Negative log-likelihood of observing y > 0."""
    if y <= 0:
        raise DomainError(f"likelihood undefined at y={y}")
    ln_y = math.log(y)
    u = ln_y - p.mu
    return LOG_SQRT_2PI + math.log(p.sigma) + ln_y + u * u / (2.0 * p.sigma**2)


def median(p: LognormalParams) -> float:
    return math.exp(p.mu)


def mean(p: LognormalParams) -> float:
    return math.exp(p.mu + 0.5 * p.sigma**2)


def sigma_bounds(p: LognormalParams) -> tuple[float, float]:
    """(lower, upper) band covering ~68.27% of the mass: exp(mu -/+ sigma)."""
    return math.exp(p.mu - p.sigma), math.exp(p.mu + p.sigma)


def sample(p: LognormalParams, n: int, rng) -> np.ndarray:
    """n i.i.d. draws exp(mu + sigma*g); ``rng`` is a Generator or a seed."""
    if n < 1:
        raise DomainError(f"need at least one sample, got n={n}")
    if not isinstance(rng, np.random.Generator):
        rng = child_rng(int(rng))
    g = rng.standard_normal(n)
    return np.exp(p.mu + p.sigma * g)

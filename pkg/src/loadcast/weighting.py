"""Lognormal parameter estimation from observed history.

Two estimators: the plain empirical one, and an exponentially weighted one
whose per-day decay rates are trainable. Recency weighting uses day lags
t_i (0 = most recent observation), weight exp(-lambda * t_i). The scale
normalizer is sum(c_i) * (1 - 1/n), which reduces exactly to the unbiased
1/(n-1) form when all weights are equal.

A graph-building variant (used inside the daily-total branch) mirrors the
numeric formulas so gradients flow into the decay parameters.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .distributions import LognormalParams
from .errors import DomainError, InsufficientDataError

# Variance floor; keeps sigma at >= 1e-6 for constant input, where the
# density would otherwise be undefined, and keeps sqrt differentiable at 0.
VARIANCE_FLOOR = 1e-12

DECAY_INIT = 0.5


@dataclass(frozen=True)
class DecayParams:
    """Per-day exponential decay rates for location and scale weights."""

    lambda_mu: float
    lambda_sigma: float

    def __post_init__(self):
        for name, value in (("lambda_mu", self.lambda_mu), ("lambda_sigma", self.lambda_sigma)):
            if not np.isfinite(value) or value < 0:
                raise DomainError(f"{name} must be finite and >= 0, got {value}")


def _validated_log(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.size < 2:
        raise InsufficientDataError(f"need at least 2 observations, got {x.size}")
    if np.any(x <= 0) or not np.all(np.isfinite(x)):
        raise DomainError("observations must be positive finite reals")
    return np.log(x)


def estimate_empirical(x) -> LognormalParams:
    """Unweighted estimate: mu = mean(ln x), sigma^2 = 1/(n-1) sum (ln x - mu)^2."""
    lx = _validated_log(x)
    mu = lx.mean()
    var = np.sum((lx - mu) ** 2) / (lx.size - 1)
    return LognormalParams(float(mu), float(np.sqrt(var + VARIANCE_FLOOR)))


def decay_weights(lam: float, t) -> np.ndarray:
    """exp(-lam * t_i) for day lags t."""
    return np.exp(-lam * np.asarray(t, dtype=np.float64))


def estimate_weighted(x, t, decay: DecayParams) -> LognormalParams:
    """Recency-weighted estimate.

    ``t`` holds the day lag of each observation (0 = most recent). The
    location uses weights exp(-lambda_mu t); the squared deviations from the
    *unweighted* log mean use weights exp(-lambda_sigma t) with normalizer
    sum(c) * (1 - 1/n).
    """
    lx = _validated_log(x)
    t = np.asarray(t, dtype=np.float64)
    if t.shape != lx.shape:
        raise DomainError(f"lags shape {t.shape} does not match observations {lx.shape}")
    if np.any(t < 0):
        raise DomainError("day lags must be nonnegative")
    n = lx.size
    c_mu = decay_weights(decay.lambda_mu, t)
    c_sigma = decay_weights(decay.lambda_sigma, t)
    mu = np.sum(c_mu * lx) / np.sum(c_mu)
    mu_emp = lx.mean()
    var = np.sum(c_sigma * (lx - mu_emp) ** 2) / (np.sum(c_sigma) * (1.0 - 1.0 / n))
    return LognormalParams(float(mu), float(np.sqrt(var + VARIANCE_FLOOR)))


def weight_ratio(lam: float, lag_gap: float) -> float:
    """How much more a lag-0 observation weighs than one ``lag_gap`` days older."""
    return float(np.exp(lam * lag_gap))


def weighted_estimate_graph(log_x: np.ndarray, t: np.ndarray,
                            lambda_mu: ad.Tensor, lambda_sigma: ad.Tensor):
    """Batched graph version: log_x is (batch, n) of precomputed ln values.

    Returns (mu, sigma) tensors of shape (batch, 1). The squared deviations
    from the unweighted log mean do not depend on the decay rates, so they
    enter the graph as constants.
    """
    batch_n, n = log_x.shape
    neg_t = ad.Tensor(-t.reshape(n, 1).astype(np.float64))
    lx = ad.Tensor(log_x)
    dev_sq = ad.Tensor((log_x - log_x.mean(axis=1, keepdims=True)) ** 2)

    c_mu = ad.exp(ad.mul(lambda_mu, neg_t))             # (n, 1)
    mu = ad.div(ad.matmul(lx, c_mu), ad.tsum(c_mu))     # (batch, 1)

    c_sigma = ad.exp(ad.mul(lambda_sigma, neg_t))
    norm = ad.mul(ad.tsum(c_sigma), 1.0 - 1.0 / n)
    var = ad.div(ad.matmul(dev_sq, c_sigma), norm)
    sigma = ad.sqrt(ad.add(var, VARIANCE_FLOOR))
    return mu, sigma

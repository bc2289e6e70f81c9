"""Monte-Carlo scaling of intraday distributions and portfolio aggregation.

Sums of lognormals have no closed form, so both operations sample: the
intraday curve is rescaled so its sampled aggregate matches the daily-total
distribution (median via an exact ratio, mean via the sampled mean, scale
recovered by inverting mean = exp(mu + sigma^2/2)); portfolios sum per-sample
draws across customers and read off the 50/84.135/15.865 percent quantiles.

Every constituent distribution gets its own seed-derived stream, so results
do not depend on iteration order. Medians and bounds are reported in original
units: the preprocessing increment is subtracted once per constituent value
and the consumption scale divisor is undone.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field

import numpy as np

from .distributions import LognormalParams, mean as ln_mean, median as ln_median, sample
from .errors import DomainError, GridMismatchError
from .pipeline import DEFAULT_EPSILON, HOURS_PER_DAY
from .util import child_rng

DEFAULT_N_SAMPLES = 5000
SIGMA_FLOOR = 1e-6

LOWER_Q = 0.15865
UPPER_Q = 0.84135


@dataclass
class DayForecast:
    """Per customer per day: daily-total params, 24 scaled hourly params, and
    extracted median/bounds in original units."""

    customer_id: str
    date: dt.date
    daily: LognormalParams
    hourly_scaled: tuple
    hourly_median: np.ndarray
    hourly_lower: np.ndarray
    hourly_upper: np.ndarray
    floored_hours: tuple = ()


@dataclass
class PortfolioForecast:
    """Aggregated median and one-sigma band for a customer set."""

    resolution: str          # "hourly" | "daily"
    dates: list              # date per slot (dates repeat across hours when hourly)
    hours: list              # hour per slot, or None entries for daily
    median: np.ndarray
    lower: np.ndarray
    upper: np.ndarray


@dataclass
class DistributionSeries:
    """One customer's per-slot forecast distributions on a common grid."""

    customer_id: str
    slots: list              # hashable slot labels, e.g. (date, hour) or date
    params: list             # LognormalParams per slot
    epsilon_per_value: float = DEFAULT_EPSILON  # increment carried by one slot value


def _check_samples(n_samples):
    if n_samples < 100:
        raise DomainError(f"need n_samples >= 100, got {n_samples}")


def scale_intraday(daily: LognormalParams, hourly, n_samples=DEFAULT_N_SAMPLES, seed=0,
                   epsilon=DEFAULT_EPSILON, unit_scale=1.0,
                   customer_id="", date=None, stream=()) -> DayForecast:
    """Rescale 24 unitless hourly distributions to match the daily total.

    ``unit_scale`` is the consumption scale divisor used in preprocessing;
    medians/bounds are returned multiplied back into original units with the
    increment subtracted per hourly value. ``stream`` namespaces the sampling
    streams (e.g. per customer and day) on top of the seed.
    """
    hourly = list(hourly)
    if len(hourly) != HOURS_PER_DAY:
        raise DomainError(f"need {HOURS_PER_DAY} hourly distributions, got {len(hourly)}")
    _check_samples(n_samples)

    sums = np.zeros(n_samples)
    for k, p in enumerate(hourly):
        sums += sample(p, n_samples, child_rng(seed, *stream, "intraday", k))
    agg_median = float(np.quantile(sums, 0.5))
    agg_mean = float(sums.mean())

    ratio_median = ln_median(daily) / agg_median
    ratio_mean = ln_mean(daily) / agg_mean

    mu_scaled = np.array([np.log(ratio_median * ln_median(p)) for p in hourly])
    mean_scaled = np.array([ratio_mean * ln_mean(p) for p in hourly])
    var_half = np.log(mean_scaled) - mu_scaled
    floored = tuple(int(k) for k in np.nonzero(var_half <= 0)[0])
    sigma_scaled = np.sqrt(np.maximum(2.0 * var_half, SIGMA_FLOOR**2))

    params = tuple(LognormalParams(float(m), float(s)) for m, s in zip(mu_scaled, sigma_scaled))
    med = (np.exp(mu_scaled) - epsilon) * unit_scale
    lower = (np.exp(mu_scaled - sigma_scaled) - epsilon) * unit_scale
    upper = (np.exp(mu_scaled + sigma_scaled) - epsilon) * unit_scale
    return DayForecast(customer_id, date, daily, params, med, lower, upper, floored)


def _sum_constituents(series_list, slot_index, n_samples, seed, tag):
    total = np.zeros(n_samples)
    for s in series_list:
        rng = child_rng(seed, tag, s.customer_id, slot_index)
        total += sample(s.params[slot_index], n_samples, rng)
    return total


def aggregate_portfolio(series_list: list[DistributionSeries], resolution: str,
                        n_samples=DEFAULT_N_SAMPLES, seed=0,
                        unit_scale=1.0) -> PortfolioForecast:
    """Sum customer forecast distributions slot by slot and extract quantiles.

    All series must share an identical slot grid. The preprocessing increment
    is subtracted once per constituent value (customers x 1 for hourly slots,
    customers x 24 for daily slots, via each series' epsilon_per_value).
    """
    if not series_list:
        raise DomainError("empty portfolio")
    _check_samples(n_samples)
    grid = series_list[0].slots
    mismatched = [s.customer_id for s in series_list if s.slots != grid]
    if mismatched:
        raise GridMismatchError(
            f"forecast grids differ from {series_list[0].customer_id}", mismatched
        )

    eps_total = sum(s.epsilon_per_value for s in series_list)
    median = np.empty(len(grid))
    lower = np.empty(len(grid))
    upper = np.empty(len(grid))
    for i in range(len(grid)):
        sums = _sum_constituents(series_list, i, n_samples, seed, f"portfolio-{resolution}")
        q = np.quantile(sums, [LOWER_Q, 0.5, UPPER_Q])
        lower[i], median[i], upper[i] = q - eps_total
    if resolution == "hourly":
        dates = [slot[0] for slot in grid]
        hours = [slot[1] for slot in grid]
    else:
        dates = list(grid)
        hours = [None] * len(grid)
    return PortfolioForecast(
        resolution, dates, hours,
        median * unit_scale, lower * unit_scale, upper * unit_scale,
    )


def aggregate_daily(day: DayForecast, n_samples=DEFAULT_N_SAMPLES, seed=0,
                    epsilon=DEFAULT_EPSILON, unit_scale=1.0, stream=()):
    """(median, lower, upper) of the day total from the 24 scaled hourly
    distributions; the increment is subtracted once per hour."""
    _check_samples(n_samples)
    sums = np.zeros(n_samples)
    for k, p in enumerate(day.hourly_scaled):
        sums += sample(p, n_samples, child_rng(seed, *stream, "day-total", k))
    q = np.quantile(sums, [LOWER_Q, 0.5, UPPER_Q]) - HOURS_PER_DAY * epsilon
    return tuple(float(v) * unit_scale for v in (q[1], q[0], q[2]))

"""Synthetic smart-meter data generator.

Stands in for real meter recordings: one year of hourly consumption and
temperature per customer, with multiplicative lognormal noise around a
customer-specific weekly/daily shape, a seasonal temperature curve, and the
two clock-change anomalies (one 23-hour spring day, one 25-hour autumn day)
so the repair path is exercised. Generator parameters are recorded per
customer so tests can compare recovered distributions against known truth.
"""

from __future__ import annotations

import datetime as dt
import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .util import child_rng

# 2019 clock-change days in the local calendar the bundled holidays cover.
SPRING_FORWARD = dt.date(2019, 3, 31)
FALL_BACK = dt.date(2019, 10, 27)


@dataclass
class SynthConfig:
    n_customers: int
    seed: int = 0
    start: dt.date = dt.date(2019, 1, 1)
    n_days: int = 365
    profile: str = "seasonal"    # "seasonal" | "stationary"
    clock_anomalies: bool = True


@dataclass
class SynthCustomer:
    """Hourly rows plus the ground-truth parameters that generated them."""

    customer_id: str
    timestamps: list
    consumption: np.ndarray
    temperature: np.ndarray
    truth: dict


def _intraday_shape(rng) -> np.ndarray:
    """Smooth positive 24-hour profile with morning/evening peaks, mean 1."""
    hours = np.arange(24)
    morning = rng.uniform(0.2, 0.7) * np.exp(-0.5 * ((hours - rng.uniform(7, 9)) / 1.8) ** 2)
    evening = rng.uniform(0.5, 1.1) * np.exp(-0.5 * ((hours - rng.uniform(19, 21)) / 2.2) ** 2)
    base = 0.55 + 0.25 * np.sin(2 * np.pi * (hours - 14) / 24)
    shape = base + morning + evening
    return shape / shape.mean()


def _temperature_series(rng, start: dt.date, n_days: int) -> np.ndarray:
    """Seasonal + diurnal sinusoids with mild autocorrelated noise, degrees C."""
    day0 = start.timetuple().tm_yday - 1
    days = day0 + np.arange(n_days)
    seasonal = 14.0 + 9.0 * np.sin(2 * np.pi * (days - 110) / 365.25)
    hours = np.arange(24)
    diurnal = 4.5 * np.sin(2 * np.pi * (hours - 9) / 24)
    noise = rng.standard_normal(n_days) * 2.0
    for i in range(1, n_days):
        noise[i] = 0.6 * noise[i - 1] + 0.8 * noise[i]
    temp = seasonal[:, None] + diurnal[None, :] + noise[:, None]
    temp += rng.standard_normal((n_days, 24)) * 0.6
    return temp.reshape(-1)


def generate_customer(config: SynthConfig, index: int) -> SynthCustomer:
    rng = child_rng(config.seed, "synth", index)
    customer_id = f"C{index:04d}"
    n_days = config.n_days

    daily_median_kwh = math.exp(rng.uniform(math.log(6.0), math.log(40.0)))
    mu_daily = math.log(daily_median_kwh)
    sigma_range = (0.10, 0.22) if config.profile == "stationary" else (0.12, 0.30)
    sigma_daily = rng.uniform(*sigma_range)
    shape = _intraday_shape(rng)

    truth = {
        "customer_id": customer_id,
        "profile": config.profile,
        "mu_daily": mu_daily,
        "sigma_daily": sigma_daily,
        "shape": shape.tolist(),
    }

    if config.profile == "stationary":
        # daily totals drawn i.i.d. from the stated lognormal; hours follow
        # the fixed shape exactly, so the totals keep their distribution
        totals = np.exp(mu_daily + sigma_daily * rng.standard_normal(n_days))
        hourly = totals[:, None] * shape[None, :] / 24.0
        weekly = np.ones(7)
        hour_noise_sigma = 0.0
    elif config.profile == "seasonal":
        weekly = np.exp(rng.uniform(-0.18, 0.18, size=7))
        weekly /= weekly.mean()
        season_amp = rng.uniform(0.05, 0.18)
        temp_coef = rng.uniform(0.0, 0.012)
        hour_noise_sigma = rng.uniform(0.18, 0.30)
        truth.update({
            "weekly": weekly.tolist(),
            "season_amp": season_amp,
            "temp_coef": temp_coef,
            "hour_noise_sigma": hour_noise_sigma,
        })
        day0 = config.start.timetuple().tm_yday - 1
        days = day0 + np.arange(n_days)
        season = season_amp * np.sin(2 * np.pi * (days - 20) / 365.25)
        dows = np.array(
            [(config.start + dt.timedelta(days=int(d))).weekday() for d in range(n_days)]
        )
        level = np.exp(
            mu_daily + season + np.log(weekly[dows])
            + sigma_daily * rng.standard_normal(n_days)
        )
        hour_noise = np.exp(
            hour_noise_sigma * rng.standard_normal((n_days, 24)) - 0.5 * hour_noise_sigma**2
        )
        hourly = level[:, None] * shape[None, :] / 24.0 * hour_noise
    else:
        raise DomainError(f"unknown profile {config.profile!r}")

    temperature = _temperature_series(child_rng(config.seed, "synth-temp", index),
                                      config.start, n_days)
    if config.profile == "seasonal":
        # colder days nudge consumption up (heating-style correlation)
        daily_temp = temperature.reshape(n_days, 24).mean(axis=1)
        hourly *= np.exp(-temp_coef * (daily_temp - 14.0))[:, None]

    timestamps = []
    cons_rows = []
    temp_rows = []
    flat_cons = hourly.reshape(-1)
    for day in range(n_days):
        date = config.start + dt.timedelta(days=day)
        for hour in range(24):
            i = day * 24 + hour
            if config.clock_anomalies and date == SPRING_FORWARD and hour == 2:
                continue  # 23-hour day: 2am never happens
            timestamps.append(dt.datetime(date.year, date.month, date.day, hour))
            cons_rows.append(flat_cons[i])
            temp_rows.append(temperature[i])
            if config.clock_anomalies and date == FALL_BACK and hour == 2:
                # 25-hour day: the repeated 2am gets its own reading
                timestamps.append(dt.datetime(date.year, date.month, date.day, hour))
                cons_rows.append(flat_cons[i] * rng.uniform(0.85, 1.15))
                temp_rows.append(temp_rows[-1] + rng.uniform(-0.5, 0.5))

    return SynthCustomer(
        customer_id, timestamps,
        np.asarray(cons_rows, dtype=np.float64),
        np.asarray(temp_rows, dtype=np.float64),
        truth,
    )


def generate(config: SynthConfig) -> list[SynthCustomer]:
    if config.n_customers < 1:
        raise DomainError("need at least one customer")
    return [generate_customer(config, i) for i in range(config.n_customers)]


def write_truth(path, customers: list[SynthCustomer]):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump([c.truth for c in customers], fh, sort_keys=True, indent=1)

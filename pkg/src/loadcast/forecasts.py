"""Forecast CSV formats.

Per-customer hourly files carry ``date,hour,median,lower,upper`` rows in kWh;
daily files drop the hour column. The files are self-sufficient for
portfolio aggregation: together with the scaling statistics the lognormal
parameters are recovered exactly by inverting the unit conversion.
"""

from __future__ import annotations

import csv
import datetime as dt
import math

import numpy as np

from .aggregate import DistributionSeries
from .distributions import LognormalParams
from .errors import IngestError
from .pipeline import HOURS_PER_DAY, ScalingParams

HOURLY_HEADER = ("date", "hour", "median", "lower", "upper")
DAILY_HEADER = ("date", "median", "lower", "upper")


def write_hourly_csv(path, rows):
    """rows: iterable of (date, hour, median, lower, upper)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(HOURLY_HEADER) + "\n")
        for date, hour, med, lo, up in rows:
            fh.write(f"{date.isoformat()},{int(hour)},{float(med)!r},{float(lo)!r},{float(up)!r}\n")


def write_daily_csv(path, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(DAILY_HEADER) + "\n")
        for date, med, lo, up in rows:
            fh.write(f"{date.isoformat()},{float(med)!r},{float(lo)!r},{float(up)!r}\n")


def _read_csv(path, header):
    out = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        first = next(reader, None)
        if first is None or tuple(first) != header:
            raise IngestError(f"{path}: expected header {','.join(header)}")
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise IngestError(f"{path}: malformed row", [line_no])
            out.append(row)
    return out


def read_hourly_csv(path):
    """-> list of (date, hour, median, lower, upper), as written."""
    rows = []
    for raw in _read_csv(path, HOURLY_HEADER):
        rows.append(
            (dt.date.fromisoformat(raw[0]), int(raw[1]),
             float(raw[2]), float(raw[3]), float(raw[4]))
        )
    return rows


def read_daily_csv(path):
    rows = []
    for raw in _read_csv(path, DAILY_HEADER):
        rows.append((dt.date.fromisoformat(raw[0]), float(raw[1]), float(raw[2]), float(raw[3])))
    return rows


def _recover_params(median_kwh, upper_kwh, scaling: ScalingParams, eps_carried):
    scaled_median = median_kwh / scaling.consumption_iqr + eps_carried
    scaled_upper = upper_kwh / scaling.consumption_iqr + eps_carried
    mu = math.log(scaled_median)
    return LognormalParams(mu, math.log(scaled_upper) - mu)


def hourly_distribution_series(customer_id, rows, scaling: ScalingParams) -> DistributionSeries:
    """Invert an hourly forecast CSV back to per-slot distributions."""
    slots = [(r[0], r[1]) for r in rows]
    params = [_recover_params(r[2], r[4], scaling, scaling.epsilon) for r in rows]
    return DistributionSeries(customer_id, slots, params, scaling.epsilon)


def daily_distribution_series(customer_id, rows, scaling: ScalingParams) -> DistributionSeries:
    """Daily totals carry the increment once per hour, i.e. 24x."""
    eps_day = HOURS_PER_DAY * scaling.epsilon
    slots = [r[0] for r in rows]
    params = [_recover_params(r[1], r[3], scaling, eps_day) for r in rows]
    return DistributionSeries(customer_id, slots, params, eps_day)


def write_portfolio_csv(path, forecast):
    """PortfolioForecast -> CSV (hourly keeps the hour column)."""
    if forecast.resolution == "hourly":
        rows = zip(forecast.dates, forecast.hours, forecast.median,
                   forecast.lower, forecast.upper)
        write_hourly_csv(path, [(d, h, m, lo, up) for d, h, m, lo, up in rows])
    else:
        rows = zip(forecast.dates, forecast.median, forecast.lower, forecast.upper)
        write_daily_csv(path, [(d, m, lo, up) for d, m, lo, up in rows])

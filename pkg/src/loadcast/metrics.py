"""Forecast evaluation: median relative error, interval coverage, and the
day-before persistence baseline.

The median relative error tolerates zero actuals (each contributes an
infinite term that the median absorbs); a mean-based relative error would
blow up on them, which is exactly why it is not offered.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, UnstableMetricError


@dataclass
class EvalReport:
    label: str              # e.g. "single_customers" / "customer_portfolio"
    resolution: str         # "hourly" | "daily"
    mdre: float
    coverage: float | None  # None for point forecasts (persistence baseline)
    n_points: int


def mdre(actual, predicted_median) -> float:
    """Median over points of |actual - predicted| / actual.

    Zero actuals contribute +inf; the metric errors out if they are the
    majority, because then the median itself is unstable.
    """
    actual = np.asarray(actual, dtype=np.float64)
    predicted = np.asarray(predicted_median, dtype=np.float64)
    if actual.shape != predicted.shape or actual.size == 0:
        raise DomainError(f"mismatched inputs {actual.shape} vs {predicted.shape}")
    if np.any(predicted <= 0):
        raise DomainError("predicted medians must be positive")
    zeros = actual == 0
    if zeros.sum() * 2 > actual.size:
        raise UnstableMetricError(
            f"{int(zeros.sum())}/{actual.size} actual values are zero"
        )
    rel = np.full(actual.shape, np.inf)
    rel[~zeros] = np.abs(actual[~zeros] - predicted[~zeros]) / actual[~zeros]
    return float(np.median(rel))


def coverage(actual, lower, upper) -> float:
    """Fraction of actuals inside [lower, upper], boundaries inclusive."""
    actual = np.asarray(actual, dtype=np.float64)
    lower = np.asarray(lower, dtype=np.float64)
    upper = np.asarray(upper, dtype=np.float64)
    if np.any(lower > upper):
        raise DomainError("lower bound exceeds upper bound")
    return float(np.mean((actual >= lower) & (actual <= upper)))


def persistence_baseline(series) -> tuple[np.ndarray, np.ndarray]:
    """Day-before forecast: (actuals from day 1 on, predictions = prior day).

    ``series`` is (n_days,) for daily totals or (n_days, 24) for hourly
    values; the first day has no prediction and is dropped.
    """
    series = np.asarray(series, dtype=np.float64)
    if series.shape[0] < 2:
        raise DomainError("persistence baseline needs at least 2 days")
    return series[1:], series[:-1]


def write_report_csv(path, reports: list[EvalReport]):
    """Flat table, one row per (aggregation level, resolution)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("metric,resolution,mdre,coverage,n_points\n")
        for r in reports:
            cov = "" if r.coverage is None else repr(float(r.coverage))
            fh.write(f"{r.label},{r.resolution},{float(r.mdre)!r},{cov},{r.n_points}\n")

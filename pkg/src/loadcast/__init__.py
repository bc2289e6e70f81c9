"""Probabilistic day-ahead load forecasting with lognormal uncertainty.

Per-customer hourly forecasts come out as full lognormal distributions;
portfolios of any composition aggregate by Monte-Carlo sampling into
calibrated median + uncertainty-band series.
"""

from .aggregate import (
    DayForecast,
    DistributionSeries,
    PortfolioForecast,
    aggregate_daily,
    aggregate_portfolio,
    scale_intraday,
)
from .distributions import LognormalParams, mean, median, nll, pdf, sample, sigma_bounds
from .metrics import EvalReport, coverage, mdre, persistence_baseline
from .nets import BranchA, BranchAConfig, BranchB, BranchBConfig, TrainConfig, train_branch
from .pipeline import (
    CalendarFeatures,
    CustomerSeries,
    SampleWindow,
    ScalingParams,
    build_calendar,
    build_windows,
    fit_scaling,
    load_holidays,
    repair_dst,
    scale_customer,
    shift_temperature_forecast,
    split_customers,
)
from .weighting import DecayParams, estimate_empirical, estimate_weighted

__version__ = "0.1.0"

__all__ = [
    "BranchA",
    "BranchAConfig",
    "BranchB",
    "BranchBConfig",
    "CalendarFeatures",
    "CustomerSeries",
    "DayForecast",
    "DecayParams",
    "DistributionSeries",
    "EvalReport",
    "LognormalParams",
    "PortfolioForecast",
    "SampleWindow",
    "ScalingParams",
    "TrainConfig",
    "aggregate_daily",
    "aggregate_portfolio",
    "build_calendar",
    "build_windows",
    "coverage",
    "estimate_empirical",
    "estimate_weighted",
    "fit_scaling",
    "load_holidays",
    "mdre",
    "mean",
    "median",
    "nll",
    "pdf",
    "persistence_baseline",
    "repair_dst",
    "sample",
    "scale_customer",
    "scale_intraday",
    "shift_temperature_forecast",
    "sigma_bounds",
    "split_customers",
    "train_branch",
]

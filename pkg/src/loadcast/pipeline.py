"""Dataset preprocessing: clock-change repair, calendar features, temperature
forecast shift, robust scaling, customer splitting, and window assembly.

Scaling keeps consumption strictly positive (divide by the q0..q75 range,
add a small increment) because the downstream model family is only defined
on positive values; all other features are centered and divided by their
q25..q75 range. Scaling statistics come from training customers only.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .errors import CalendarRangeError, DomainError, GapReportError, InsufficientDataError
from .util import child_rng

HOURS_PER_DAY = 24
HISTORY_DAYS = 14          # daily history consumed by the daily-total branch
CURVE_HISTORY_DAYS = 7     # hourly consumption history for the intraday branch
TEMP_HISTORY_DAYS = 3      # hourly temperature-forecast history for the intraday branch
CURVE_TARGET_SUM = 24.0    # intraday targets are renormalized to this sum
DEFAULT_EPSILON = 1e-5

DAY_CATEGORIES = ("monday", "tue_thu", "friday", "saturday", "sunday_or_holiday")


@dataclass
class RawSeries:
    """Hourly rows for one customer as ingested, clock anomalies intact."""

    customer_id: str
    timestamps: list  # datetime, sorted
    consumption: np.ndarray
    temperature: np.ndarray


@dataclass
class CustomerSeries:
    """One customer's repaired year: a dense local-calendar hourly grid."""

    customer_id: str
    start_date: dt.date
    consumption: np.ndarray  # (n_days * 24,), kWh
    temperature: np.ndarray  # (n_days * 24,), degrees C

    @property
    def n_days(self) -> int:
        return self.consumption.size // HOURS_PER_DAY

    def date_of_day(self, day: int) -> dt.date:
        return self.start_date + dt.timedelta(days=day)


@dataclass
class HolidayTable:
    dates: frozenset
    years: frozenset

    def is_holiday(self, date: dt.date) -> bool:
        if date.year not in self.years:
            raise CalendarRangeError(
                f"{date.isoformat()} outside holiday table years {sorted(self.years)}"
            )
        return date in self.dates


@dataclass
class CalendarFeatures:
    category: str            # one of DAY_CATEGORIES
    month: int               # 1-12
    day_of_month: int        # 1-31

    def one_hot(self) -> np.ndarray:
        v = np.zeros(len(DAY_CATEGORIES))
        v[DAY_CATEGORIES.index(self.category)] = 1.0
        return v


@dataclass
class ScalingParams:
    """Robust scaling statistics fitted on training customers."""

    consumption_iqr: float           # q75 - q0 of training consumption
    epsilon: float = DEFAULT_EPSILON
    feature_center: dict = field(default_factory=dict)
    feature_iqr: dict = field(default_factory=dict)

    def scale_consumption(self, x):
        return np.asarray(x, dtype=np.float64) / self.consumption_iqr + self.epsilon

    def unscale_consumption(self, x):
        return (np.asarray(x, dtype=np.float64) - self.epsilon) * self.consumption_iqr

    def scale_feature(self, name, x):
        return (np.asarray(x, dtype=np.float64) - self.feature_center[name]) / self.feature_iqr[name]

    def to_dict(self) -> dict:
        return {
            "consumption_iqr": self.consumption_iqr,
            "epsilon": self.epsilon,
            "feature_center": dict(self.feature_center),
            "feature_iqr": dict(self.feature_iqr),
        }

    @classmethod
    def from_dict(cls, d) -> "ScalingParams":
        return cls(
            consumption_iqr=float(d["consumption_iqr"]),
            epsilon=float(d["epsilon"]),
            feature_center={k: float(v) for k, v in d["feature_center"].items()},
            feature_iqr={k: float(v) for k, v in d["feature_iqr"].items()},
        )


@dataclass
class ScaledCustomer:
    """Scaled model-ready arrays for one customer.

    ``consumption`` is (n_days, 24) scaled consumption. ``tempfc`` is
    (n_days + 1, 24) scaled temperature forecast where row d holds the
    forecast for day d (= the previous day's temperature); row 0 is NaN and
    the extra final row is the true day-ahead forecast past the data end.
    """

    customer_id: str
    start_date: dt.date
    consumption: np.ndarray
    tempfc: np.ndarray

    @property
    def n_days(self) -> int:
        return self.consumption.shape[0]

    def date_of_day(self, day: int) -> dt.date:
        return self.start_date + dt.timedelta(days=day)


@dataclass
class SampleWindow:
    """All model inputs (and, when available, targets) for one customer-day."""

    customer_id: str
    date: dt.date
    day_index: int
    daily_means: np.ndarray        # (14,) scaled daily mean consumption, oldest first
    daily_mean_tempfc: np.ndarray  # (14,) scaled daily mean temperature forecast
    history_totals: np.ndarray     # (14,) scaled daily totals, oldest first
    calendar: np.ndarray           # (7,) one-hot day category + scaled month/day-of-month
    hourly_consumption: np.ndarray # (168,) scaled, oldest hour first
    hourly_tempfc: np.ndarray      # (72,) scaled temperature forecast
    target_total: float | None     # scaled daily total of the target day
    target_curve: np.ndarray | None  # (24,) target-day hours renormalized to sum 24


# -- clock-change repair -----------------------------------------------------


def repair_dst(raw: RawSeries) -> CustomerSeries:
    """Build a dense 24-hours-per-day grid from ingested rows.

    Exactly one 23-hour day (missing 2am, filled with the 1am/3am average)
    and one 25-hour day (two 2am values, replaced by their average) are
    repaired. Any other gap or duplicate aborts with a report instead of
    silently imputing.
    """
    by_day: dict = {}
    for ts, cons, temp in zip(raw.timestamps, raw.consumption, raw.temperature):
        by_day.setdefault(ts.date(), []).append((ts.hour, float(cons), float(temp)))

    days = sorted(by_day)
    gaps = []
    spring_days = 0
    autumn_days = 0
    expected = days[0]
    for day in days:
        if day != expected:
            gaps.append((raw.customer_id, expected.isoformat(), "missing day(s)"))
            expected = day
        expected = expected + dt.timedelta(days=1)

    consumption = np.empty(len(days) * HOURS_PER_DAY)
    temperature = np.empty(len(days) * HOURS_PER_DAY)
    for d, day in enumerate(days):
        rows = by_day[day]
        hours = [h for h, _, _ in rows]
        counts = {h: hours.count(h) for h in set(hours)}
        cons_by_hour = {}
        temp_by_hour = {}
        for h, c, t in rows:
            cons_by_hour.setdefault(h, []).append(c)
            temp_by_hour.setdefault(h, []).append(t)

        duplicated = sorted(h for h, n in counts.items() if n > 1)
        missing = sorted(set(range(HOURS_PER_DAY)) - set(hours))
        if duplicated == [2] and counts[2] == 2 and not missing:
            autumn_days += 1
            cons_by_hour[2] = [float(np.mean(cons_by_hour[2]))]
            temp_by_hour[2] = [float(np.mean(temp_by_hour[2]))]
        elif missing == [2] and not duplicated:
            spring_days += 1
            cons_by_hour[2] = [float(np.mean([cons_by_hour[1][0], cons_by_hour[3][0]]))]
            temp_by_hour[2] = [float(np.mean([temp_by_hour[1][0], temp_by_hour[3][0]]))]
        elif missing or duplicated:
            gaps.append(
                (raw.customer_id, day.isoformat(),
                 f"missing hours {missing}, duplicated hours {duplicated}")
            )
            continue

        base = d * HOURS_PER_DAY
        for h in range(HOURS_PER_DAY):
            consumption[base + h] = cons_by_hour[h][0]
            temperature[base + h] = temp_by_hour[h][0]

    if spring_days > 1 or autumn_days > 1:
        gaps.append(
            (raw.customer_id, "-", f"{spring_days} 23-hour days, {autumn_days} 25-hour days")
        )
    if gaps:
        raise GapReportError(
            f"{raw.customer_id}: {len(gaps)} unrepairable gap(s), e.g. {gaps[0]}", gaps
        )
    return CustomerSeries(raw.customer_id, days[0], consumption, temperature)


# -- calendar features ---------------------------------------------------------


def load_holidays(path=None) -> HolidayTable:
    """Read one ISO date per line (# comments allowed); default bundled table."""
    if path is None:
        text = resources.files("loadcast.data").joinpath("madrid_holidays_2019.txt").read_text()
    else:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    dates = set()
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        dates.add(dt.date.fromisoformat(line))
    if not dates:
        raise DomainError("holiday table is empty")
    return HolidayTable(frozenset(dates), frozenset(d.year for d in dates))


def build_calendar(date: dt.date, holidays: HolidayTable) -> CalendarFeatures:
    """Day category with holidays forcing the sunday_or_holiday class."""
    if holidays.is_holiday(date) or date.weekday() == 6:
        category = "sunday_or_holiday"
    elif date.weekday() == 0:
        category = "monday"
    elif date.weekday() in (1, 2, 3):
        category = "tue_thu"
    elif date.weekday() == 4:
        category = "friday"
    else:
        category = "saturday"
    return CalendarFeatures(category, date.month, date.day)


# -- temperature forecast -------------------------------------------------------


def shift_temperature_forecast(series: CustomerSeries) -> np.ndarray:
    """forecast(day d, hour h) = temperature(day d-1, hour h); day 0 is NaN.

    Stands in for a real day-ahead forecast feed; window assembly never reads
    the undefined first day.
    """
    if series.n_days < 2:
        raise InsufficientDataError("need at least 2 days of temperature")
    fc = np.full_like(series.temperature, np.nan)
    fc[HOURS_PER_DAY:] = series.temperature[:-HOURS_PER_DAY]
    return fc


# -- scaling ---------------------------------------------------------------------


def fit_scaling(train_series: list[CustomerSeries], epsilon=DEFAULT_EPSILON) -> ScalingParams:
    """Fit robust scaling statistics on training customers only."""
    if not train_series:
        raise InsufficientDataError("no training customers to fit scaling on")
    cons = np.concatenate([s.consumption for s in train_series])
    iqr = float(np.quantile(cons, 0.75) - np.quantile(cons, 0.0))
    if iqr <= 0:
        raise DomainError("consumption q0..q75 range is zero; cannot scale")

    tempfc = np.concatenate([shift_temperature_forecast(s)[HOURS_PER_DAY:] for s in train_series])
    months = np.concatenate(
        [[s.date_of_day(d).month for d in range(s.n_days)] for s in train_series]
    ).astype(np.float64)
    doms = np.concatenate(
        [[s.date_of_day(d).day for d in range(s.n_days)] for s in train_series]
    ).astype(np.float64)

    center = {}
    spread = {}
    for name, values in (("temp_forecast", tempfc), ("month", months), ("day_of_month", doms)):
        center[name] = float(values.mean())
        rng = float(np.quantile(values, 0.75) - np.quantile(values, 0.25))
        if rng <= 0:
            raise DomainError(f"feature {name!r} has zero q25..q75 range")
        spread[name] = rng
    return ScalingParams(iqr, epsilon, center, spread)


# -- customer split ----------------------------------------------------------------


def split_customers(customer_ids, seed: int, fractions=(0.8, 0.1, 0.1)):
    """Disjoint (train, test, validation) id lists; train takes the remainder."""
    ids = sorted(customer_ids)
    if len(ids) < 10:
        raise InsufficientDataError(f"need at least 10 customers to split, got {len(ids)}")
    rng = child_rng(seed, "customer-split")
    order = [ids[i] for i in rng.permutation(len(ids))]
    n_test = round(fractions[1] * len(ids))
    n_val = round(fractions[2] * len(ids))
    test = sorted(order[:n_test])
    validation = sorted(order[n_test : n_test + n_val])
    train = sorted(order[n_test + n_val :])
    return train, test, validation


# -- window assembly ------------------------------------------------------------------


def scale_customer(series: CustomerSeries, scaling: ScalingParams) -> ScaledCustomer:
    """Apply fitted scaling; the forecast array gains one day past the end
    (the true day-ahead forecast, i.e. the last observed day's temperature)."""
    cons = scaling.scale_consumption(series.consumption).reshape(-1, HOURS_PER_DAY)
    fc_raw = np.concatenate(
        [shift_temperature_forecast(series), series.temperature[-HOURS_PER_DAY:]]
    )
    tempfc = scaling.scale_feature("temp_forecast", fc_raw).reshape(-1, HOURS_PER_DAY)
    return ScaledCustomer(series.customer_id, series.start_date, cons, tempfc)


def build_windows(scaled: ScaledCustomer, scaling: ScalingParams, holidays: HolidayTable,
                  with_targets=True) -> list[SampleWindow]:
    """Assemble one window per target day with 14 complete prior days.

    With targets, the last usable target day is the final observed day; for
    inference one extra day past the end of the data is emitted (its inputs
    only ever reach back to observed history).
    """
    cons = scaled.consumption
    tempfc = scaled.tempfc
    n_days = scaled.n_days

    daily_totals = cons.sum(axis=1)
    daily_means = cons.mean(axis=1)
    daily_mean_fc = tempfc.mean(axis=1)

    last_day = n_days - 1 if with_targets else n_days
    windows = []
    for day in range(HISTORY_DAYS, last_day + 1):
        date = scaled.date_of_day(day)
        if day == n_days:
            # the day-ahead row past the data end needs next-year calendar
            # coverage; without it, stop at the last observed day
            try:
                cal = build_calendar(date, holidays)
            except CalendarRangeError:
                break
        else:
            cal = build_calendar(date, holidays)
        calendar = np.concatenate(
            [
                cal.one_hot(),
                [scaling.scale_feature("month", cal.month)],
                [scaling.scale_feature("day_of_month", cal.day_of_month)],
            ]
        )
        # temperature-forecast window ends at the target day: the most recent
        # 14 forecast values known at prediction time (shifted actuals of the
        # 14 prior days), so the first emitted sample sits at day 14
        fc_window = daily_mean_fc[day - HISTORY_DAYS + 1 : day + 1]
        if np.any(np.isnan(fc_window)):
            raise DomainError(f"{scaled.customer_id}: forecast window precedes data start")
        if with_targets:
            hours = cons[day]
            target_total = float(daily_totals[day])
            target_curve = hours * (CURVE_TARGET_SUM / hours.sum())
        else:
            target_total = None
            target_curve = None
        windows.append(
            SampleWindow(
                customer_id=scaled.customer_id,
                date=date,
                day_index=day,
                daily_means=daily_means[day - HISTORY_DAYS : day].copy(),
                daily_mean_tempfc=fc_window.copy(),
                history_totals=daily_totals[day - HISTORY_DAYS : day].copy(),
                calendar=calendar,
                hourly_consumption=cons[day - CURVE_HISTORY_DAYS : day].reshape(-1).copy(),
                hourly_tempfc=tempfc[day - TEMP_HISTORY_DAYS : day].reshape(-1).copy(),
                target_total=target_total,
                target_curve=target_curve,
            )
        )
    return windows

"""Command-line workflow: synth | preprocess | train | predict | aggregate |
evaluate | inspect.

Exit codes: 0 success, 1 user error (bad input, bad config, data problems),
2 internal error. All commands are deterministic under fixed seeds.
"""

from __future__ import annotations

import argparse
import datetime as dt
import json
import os
import sys
import traceback

import numpy as np

from . import csvio, forecasts, synth
from .aggregate import aggregate_portfolio, scale_intraday
from .config import RunConfig, build_config
from .datastore import Dataset, load_dataset, save_dataset
from .distributions import LognormalParams, median as ln_median, sigma_bounds
from .errors import ConfigError, LoadcastError
from .metrics import EvalReport, coverage, mdre, write_report_csv
from .model_io import ForecastModel, load_model, save_model
from .nets import BranchA, BranchAConfig, BranchB, BranchBConfig, TrainConfig, train_branch
from .pipeline import (
    HOURS_PER_DAY,
    build_windows,
    fit_scaling,
    load_holidays,
    repair_dst,
    scale_customer,
    split_customers,
)


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on usage errors; those are user errors here
    def error(self, message):
        raise ConfigError(message)


def _config_from_args(args, **overrides) -> RunConfig:
    merged = {k: v for k, v in overrides.items() if v is not None}
    return build_config(getattr(args, "config", None), merged)


# -- synth ---------------------------------------------------------------


def cmd_synth(args):
    os.makedirs(args.out, exist_ok=True)
    cfg = synth.SynthConfig(
        n_customers=args.customers,
        seed=args.seed,
        n_days=args.days,
        profile=args.profile,
        clock_anomalies=not args.no_clock_anomalies,
    )
    customers = synth.generate(cfg)
    csvio.write_series_csv(
        os.path.join(args.out, "consumption.csv"),
        [(c.customer_id, c.timestamps, c.consumption) for c in customers],
    )
    csvio.write_series_csv(
        os.path.join(args.out, "temperature.csv"),
        [(c.customer_id, c.timestamps, c.temperature) for c in customers],
    )
    synth.write_truth(os.path.join(args.out, "truth.json"), customers)
    print(f"synth: wrote {len(customers)} customers x {args.days} days to {args.out}")


# -- preprocess -----------------------------------------------------------


def cmd_preprocess(args):
    config = _config_from_args(
        args,
        consumption_csv=args.consumption,
        temperature_csv=args.temperature,
        holiday_file=args.holidays,
        split_seed=args.split_seed,
        epsilon=args.epsilon,
        output_dir=args.out,
    )
    config.validate(required_paths=("consumption_csv", "temperature_csv"))
    series, report = csvio.ingest(config.consumption_csv, config.temperature_csv)
    repaired = {s.customer_id: repair_dst(s) for s in series}
    train_ids, test_ids, val_ids = split_customers(list(repaired), config.split_seed)
    scaling = fit_scaling([repaired[cid] for cid in train_ids], epsilon=config.epsilon)
    holidays = load_holidays(config.holiday_file or None)
    dataset = Dataset(
        customers={cid: scale_customer(s, scaling) for cid, s in repaired.items()},
        scaling=scaling,
        split={"train": train_ids, "test": test_ids, "validation": val_ids},
        holidays=holidays,
        split_seed=config.split_seed,
    )
    os.makedirs(config.output_dir, exist_ok=True)
    out_path = os.path.join(config.output_dir, "dataset.json")
    save_dataset(out_path, dataset)
    with open(os.path.join(config.output_dir, "scaling.json"), "w", encoding="utf-8") as fh:
        json.dump(scaling.to_dict(), fh, sort_keys=True, indent=1)
    anomalies = sum(r["duplicate_hours"] + r["missing_hours"] for r in report.values())
    print(
        f"preprocess: {len(repaired)} customers "
        f"(train {len(train_ids)} / test {len(test_ids)} / validation {len(val_ids)}), "
        f"{anomalies} clock-change rows repaired, wrote {out_path}"
    )


# -- train ----------------------------------------------------------------


def _windows_for(dataset: Dataset, ids, with_targets=True):
    out = []
    for cid in ids:
        out.extend(
            build_windows(dataset.customers[cid], dataset.scaling, dataset.holidays,
                          with_targets=with_targets)
        )
    return out


def cmd_train(args):
    config = _config_from_args(
        args,
        training_seed=args.seed,
        learning_rate=args.learning_rate,
        batch_size=args.batch_size,
        max_epochs=args.epochs,
        patience=args.patience,
        hidden_width=args.hidden_width,
        conv_channels=args.conv_channels,
        sigma_max=args.sigma_max,
    )
    config.validate()
    dataset = load_dataset(args.data)
    train_windows = _windows_for(dataset, dataset.split["train"])
    test_windows = _windows_for(dataset, dataset.split["test"])
    if not train_windows:
        raise ConfigError("no training windows; is the dataset long enough?")

    train_cfg = TrainConfig(
        learning_rate=config.learning_rate,
        batch_size=config.batch_size,
        max_epochs=config.max_epochs,
        patience=config.patience,
        seed=config.training_seed,
    )
    branch_a = BranchA(
        BranchAConfig(
            hidden_width=config.hidden_width,
            hidden_layers=config.hidden_layers,
            leaky_slope=config.leaky_slope,
            sigma_max=config.sigma_max,
            decay_init=config.decay_init,
        ),
        seed=config.training_seed,
    )
    branch_b = BranchB(
        BranchBConfig(
            conv_channels=config.conv_channels,
            head_channels=config.head_channels,
            leaky_slope=config.leaky_slope,
        ),
        seed=config.training_seed,
    )
    for name, model in (("a", branch_a), ("b", branch_b)):
        if args.branch not in ("both", name):
            continue
        history = train_branch(model, train_windows, test_windows, train_cfg)
        for h in history:
            print(
                f"train[{name}] epoch {h['epoch']:3d}  "
                f"train_nll {h['train_nll']:.5f}  eval_nll {h.get('eval_nll', float('nan')):.5f}"
            )
    lam_mu, lam_sigma = branch_a.decay_params()
    save_model(args.out, ForecastModel(branch_a, branch_b, dataset.scaling,
                                       config.training_seed))
    print(f"train: decay rates lambda_mu={lam_mu:.4f} lambda_sigma={lam_sigma:.4f}")
    print(f"train: wrote {args.out}")


# -- predict ----------------------------------------------------------------


def _select_customers(args, dataset: Dataset):
    if args.customers:
        ids = [c.strip() for c in args.customers.split(",") if c.strip()]
        missing = [c for c in ids if c not in dataset.customers]
        if missing:
            raise ConfigError(f"unknown customers: {missing}")
        return ids
    if args.split:
        if args.split not in dataset.split:
            raise ConfigError(f"unknown split {args.split!r}")
        return list(dataset.split[args.split])
    return sorted(dataset.customers)


def cmd_predict(args):
    config = _config_from_args(args, n_samples=args.n_samples, sampling_seed=args.seed)
    config.validate()
    model = load_model(args.model)
    dataset = load_dataset(args.data)
    if model.scaling.to_dict() != dataset.scaling.to_dict():
        raise ConfigError("model and dataset carry different scaling parameters")
    scaling = model.scaling
    ids = _select_customers(args, dataset)
    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "scaling.json"), "w", encoding="utf-8") as fh:
        json.dump(scaling.to_dict(), fh, sort_keys=True, indent=1)

    eps_day = HOURS_PER_DAY * scaling.epsilon
    for cid in ids:
        windows = build_windows(dataset.customers[cid], scaling, dataset.holidays,
                                with_targets=False)
        mu_a, sigma_a = model.branch_a.predict(windows)
        mu_b, sigma_b = model.branch_b.predict(windows)
        hourly_rows = []
        daily_rows = []
        for i, w in enumerate(windows):
            daily = LognormalParams(float(mu_a[i]), float(sigma_a[i]))
            hourly = [
                LognormalParams(float(mu_b[i, k]), float(sigma_b[i, k]))
                for k in range(HOURS_PER_DAY)
            ]
            day = scale_intraday(
                daily, hourly,
                n_samples=config.n_samples,
                seed=config.sampling_seed,
                epsilon=scaling.epsilon,
                unit_scale=scaling.consumption_iqr,
                customer_id=cid,
                date=w.date,
                stream=(cid, w.day_index),
            )
            for k in range(HOURS_PER_DAY):
                hourly_rows.append(
                    (w.date, k, day.hourly_median[k], day.hourly_lower[k], day.hourly_upper[k])
                )
            lo, up = sigma_bounds(daily)
            daily_rows.append(
                (
                    w.date,
                    (ln_median(daily) - eps_day) * scaling.consumption_iqr,
                    (lo - eps_day) * scaling.consumption_iqr,
                    (up - eps_day) * scaling.consumption_iqr,
                )
            )
        forecasts.write_hourly_csv(os.path.join(args.out, f"{cid}.csv"), hourly_rows)
        forecasts.write_daily_csv(os.path.join(args.out, f"{cid}_daily.csv"), daily_rows)
    print(f"predict: wrote forecasts for {len(ids)} customers to {args.out}")


# -- aggregate ----------------------------------------------------------------


def _read_portfolio_file(path):
    ids = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if line:
                ids.append(line)
    if not ids:
        raise ConfigError(f"portfolio file {path} names no customers")
    return ids


def _forecast_scaling(forecast_dir):
    path = os.path.join(forecast_dir, "scaling.json")
    if not os.path.exists(path):
        raise ConfigError(f"missing {path}; run predict first")
    from .pipeline import ScalingParams

    with open(path, "r", encoding="utf-8") as fh:
        return ScalingParams.from_dict(json.load(fh))


def cmd_aggregate(args):
    config = _config_from_args(args, n_samples=args.n_samples, sampling_seed=args.seed)
    config.validate()
    members = _read_portfolio_file(args.portfolio)
    scaling = _forecast_scaling(args.forecasts)
    os.makedirs(args.out, exist_ok=True)

    missing = [
        cid for cid in members
        if not os.path.exists(os.path.join(args.forecasts, f"{cid}.csv"))
    ]
    if missing:
        raise ConfigError(f"no forecasts for portfolio members: {missing}")

    if args.resolution in ("hourly", "both"):
        series = [
            forecasts.hourly_distribution_series(
                cid, forecasts.read_hourly_csv(os.path.join(args.forecasts, f"{cid}.csv")),
                scaling,
            )
            for cid in members
        ]
        pf = aggregate_portfolio(series, "hourly", n_samples=config.n_samples,
                                 seed=config.sampling_seed,
                                 unit_scale=scaling.consumption_iqr)
        forecasts.write_portfolio_csv(os.path.join(args.out, "portfolio_hourly.csv"), pf)
    if args.resolution in ("daily", "both"):
        series = [
            forecasts.daily_distribution_series(
                cid,
                forecasts.read_daily_csv(os.path.join(args.forecasts, f"{cid}_daily.csv")),
                scaling,
            )
            for cid in members
        ]
        pf = aggregate_portfolio(series, "daily", n_samples=config.n_samples,
                                 seed=config.sampling_seed,
                                 unit_scale=scaling.consumption_iqr)
        forecasts.write_portfolio_csv(os.path.join(args.out, "portfolio_daily.csv"), pf)
    print(f"aggregate: {len(members)} customers -> {args.out} ({args.resolution})")


# -- evaluate -----------------------------------------------------------------


def _actual_arrays(dataset: Dataset, cid):
    """(dates, hourly kWh (n_days, 24)) recovered from the scaled store."""
    c = dataset.customers[cid]
    kwh = dataset.scaling.unscale_consumption(c.consumption)
    dates = [c.date_of_day(d) for d in range(c.n_days)]
    return dates, kwh


def _single_customer_reports(dataset, ids, forecast_dir):
    h_act, h_pred, h_lo, h_up = [], [], [], []
    d_act, d_pred, d_lo, d_up = [], [], [], []
    hp_act, hp_pred = [], []  # persistence on the same points
    dp_act, dp_pred = [], []
    for cid in ids:
        dates, kwh = _actual_arrays(dataset, cid)
        index = {day: i for i, day in enumerate(dates)}
        for date, hour, med, lo, up in forecasts.read_hourly_csv(
            os.path.join(forecast_dir, f"{cid}.csv")
        ):
            i = index.get(date)
            if i is None:
                continue
            h_act.append(kwh[i, hour])
            h_pred.append(med)
            h_lo.append(lo)
            h_up.append(up)
            hp_act.append(kwh[i, hour])
            hp_pred.append(kwh[i - 1, hour])
        daily_kwh = kwh.sum(axis=1)
        for date, med, lo, up in forecasts.read_daily_csv(
            os.path.join(forecast_dir, f"{cid}_daily.csv")
        ):
            i = index.get(date)
            if i is None:
                continue
            d_act.append(daily_kwh[i])
            d_pred.append(med)
            d_lo.append(lo)
            d_up.append(up)
            dp_act.append(daily_kwh[i])
            dp_pred.append(daily_kwh[i - 1])
    reports = [
        EvalReport("single_customers", "hourly", mdre(h_act, h_pred),
                   coverage(h_act, h_lo, h_up), len(h_act)),
        EvalReport("single_customers", "daily", mdre(d_act, d_pred),
                   coverage(d_act, d_lo, d_up), len(d_act)),
        EvalReport("persistence_single_customers", "hourly",
                   mdre(hp_act, np.maximum(hp_pred, 1e-12)), None, len(hp_act)),
        EvalReport("persistence_single_customers", "daily",
                   mdre(dp_act, np.maximum(dp_pred, 1e-12)), None, len(dp_act)),
    ]
    return reports


def _portfolio_reports(dataset, members, hourly_csv, daily_csv):
    actual = {}
    for cid in members:
        dates, kwh = _actual_arrays(dataset, cid)
        for i, date in enumerate(dates):
            for hour in range(HOURS_PER_DAY):
                actual[(date, hour)] = actual.get((date, hour), 0.0) + kwh[i, hour]
    reports = []
    if hourly_csv:
        act, pred, lo, up, p_act, p_pred = [], [], [], [], [], []
        for date, hour, med, l, u in forecasts.read_hourly_csv(hourly_csv):
            if (date, hour) not in actual:
                continue
            act.append(actual[(date, hour)])
            pred.append(med)
            lo.append(l)
            up.append(u)
            prev = actual.get((date - dt.timedelta(days=1), hour))
            if prev is not None:
                p_act.append(actual[(date, hour)])
                p_pred.append(prev)
        reports.append(EvalReport("customer_portfolio", "hourly", mdre(act, pred),
                                  coverage(act, lo, up), len(act)))
        reports.append(EvalReport("persistence_portfolio", "hourly",
                                  mdre(p_act, np.maximum(p_pred, 1e-12)), None, len(p_act)))
    if daily_csv:
        daily_actual = {}
        for (date, hour), v in actual.items():
            daily_actual[date] = daily_actual.get(date, 0.0) + v
        act, pred, lo, up, p_act, p_pred = [], [], [], [], [], []
        for date, med, l, u in forecasts.read_daily_csv(daily_csv):
            if date not in daily_actual:
                continue
            act.append(daily_actual[date])
            pred.append(med)
            lo.append(l)
            up.append(u)
            prev = daily_actual.get(date - dt.timedelta(days=1))
            if prev is not None:
                p_act.append(daily_actual[date])
                p_pred.append(prev)
        reports.append(EvalReport("customer_portfolio", "daily", mdre(act, pred),
                                  coverage(act, lo, up), len(act)))
        reports.append(EvalReport("persistence_portfolio", "daily",
                                  mdre(p_act, np.maximum(p_pred, 1e-12)), None, len(p_act)))
    return reports


def cmd_evaluate(args):
    dataset = load_dataset(args.data)
    if args.customers or args.split:
        ids = _select_customers(args, dataset)
    else:
        ids = sorted(
            f[: -len(".csv")]
            for f in os.listdir(args.forecasts)
            if f.endswith(".csv") and not f.endswith("_daily.csv")
            and f[: -len(".csv")] in dataset.customers
        )
    if not ids:
        raise ConfigError("no customers to evaluate")
    reports = _single_customer_reports(dataset, ids, args.forecasts)
    if args.portfolio_hourly or args.portfolio_daily:
        if not args.portfolio:
            raise ConfigError("--portfolio member file is required with portfolio CSVs")
        members = _read_portfolio_file(args.portfolio)
        reports.extend(
            _portfolio_reports(dataset, members, args.portfolio_hourly, args.portfolio_daily)
        )
    write_report_csv(args.out, reports)
    for r in reports:
        cov = "-" if r.coverage is None else f"{100 * r.coverage:5.1f}%"
        print(f"evaluate: {r.label:32s} {r.resolution:6s} "
              f"mdre {100 * r.mdre:6.2f}%  coverage {cov}  n={r.n_points}")
    print(f"evaluate: wrote {args.out}")


# -- inspect ------------------------------------------------------------------


def cmd_inspect(args):
    if not args.model and not args.consumption:
        raise ConfigError("inspect needs --model and/or --consumption")
    if args.model:
        model = load_model(args.model)
        lam_mu, lam_sigma = model.branch_a.decay_params()
        print(f"model: {args.model}")
        print(f"  training_seed: {model.training_seed}")
        print(f"  lambda_mu: {lam_mu!r}")
        print(f"  lambda_sigma: {lam_sigma!r}")
        print(f"  sigma_max: {model.branch_a.config.sigma_max!r}")
        print(f"  leaky_slope: {model.branch_a.config.leaky_slope!r}")
        print(f"  scaling.consumption_iqr: {model.scaling.consumption_iqr!r}")
        print(f"  scaling.epsilon: {model.scaling.epsilon!r}")
        for name in sorted(model.scaling.feature_center):
            print(
                f"  scaling.{name}: center {model.scaling.feature_center[name]!r}, "
                f"iqr {model.scaling.feature_iqr[name]!r}"
            )
    if args.consumption:
        if not args.histogram:
            raise ConfigError("--histogram OUT is required with --consumption")
        per_customer = csvio._read_rows(args.consumption)
        values = np.array([v for rows in per_customer.values() for _, v, _ in rows])
        with open(args.histogram, "w", encoding="utf-8", newline="") as fh:
            fh.write("kind,bin_lower,bin_upper,count\n")
            counts, edges = np.histogram(values, bins=args.bins)
            for c, lo, up in zip(counts, edges[:-1], edges[1:]):
                fh.write(f"value,{float(lo)!r},{float(up)!r},{int(c)}\n")
            positive = values[values > 0]
            counts, edges = np.histogram(np.log(positive), bins=args.bins)
            for c, lo, up in zip(counts, edges[:-1], edges[1:]):
                fh.write(f"log_value,{float(lo)!r},{float(up)!r},{int(c)}\n")
        print(
            f"inspect: histogram of {values.size} values "
            f"({np.sum(values == 0)} zeros) -> {args.histogram}"
        )


# -- parser --------------------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(prog="loadcast", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic smart-meter dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--customers", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--days", type=int, default=365)
    p.add_argument("--profile", choices=("seasonal", "stationary"), default="seasonal")
    p.add_argument("--no-clock-anomalies", action="store_true")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("preprocess", help="repair, split, scale and store a dataset")
    p.add_argument("--consumption")
    p.add_argument("--temperature")
    p.add_argument("--out")
    p.add_argument("--config")
    p.add_argument("--holidays")
    p.add_argument("--split-seed", type=int, dest="split_seed")
    p.add_argument("--epsilon", type=float)
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("train", help="train both branches and persist the model")
    p.add_argument("--data", required=True, help="dataset.json from preprocess")
    p.add_argument("--out", required=True, help="model file to write")
    p.add_argument("--config")
    p.add_argument("--branch", choices=("both", "a", "b"), default="both")
    p.add_argument("--seed", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--learning-rate", type=float, dest="learning_rate")
    p.add_argument("--batch-size", type=int, dest="batch_size")
    p.add_argument("--patience", type=int)
    p.add_argument("--hidden-width", type=int, dest="hidden_width")
    p.add_argument("--conv-channels", type=int, dest="conv_channels")
    p.add_argument("--sigma-max", type=float, dest="sigma_max")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="emit per-customer day-ahead forecast CSVs")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.add_argument("--customers", help="comma-separated customer ids")
    p.add_argument("--split", help="train|test|validation")
    p.add_argument("--n-samples", type=int, dest="n_samples")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("aggregate", help="aggregate customer forecasts into a portfolio")
    p.add_argument("--forecasts", required=True, help="directory written by predict")
    p.add_argument("--portfolio", required=True, help="file with one customer id per line")
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.add_argument("--resolution", choices=("both", "hourly", "daily"), default="both")
    p.add_argument("--n-samples", type=int, dest="n_samples")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_aggregate)

    p = sub.add_parser("evaluate", help="score forecasts against actuals")
    p.add_argument("--data", required=True)
    p.add_argument("--forecasts", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--customers")
    p.add_argument("--split")
    p.add_argument("--portfolio")
    p.add_argument("--portfolio-hourly", dest="portfolio_hourly")
    p.add_argument("--portfolio-daily", dest="portfolio_daily")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("inspect", help="print model parameters / emit data histograms")
    p.add_argument("--model")
    p.add_argument("--consumption")
    p.add_argument("--histogram")
    p.add_argument("--bins", type=int, default=60)
    p.set_defaults(func=cmd_inspect)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        args.func(args)
        return 0
    except LoadcastError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except SystemExit:
        raise
    except Exception:
        traceback.print_exc()
        return 2


if __name__ == "__main__":
    sys.exit(main())

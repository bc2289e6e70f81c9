"""CSV ingestion and export.

Input format (both consumption and temperature): UTF-8, header row
``customer_id,timestamp,value``, one row per customer-hour, ISO-8601 local
timestamps, ``.`` decimal separator. Clock-change anomalies (a missing 2am,
a doubled 2am) pass through untouched so the preprocessing repair can apply
its averaging rules; any other duplicate is rejected.
"""

from __future__ import annotations

import csv
import datetime as dt

import numpy as np

from .errors import IngestError
from .pipeline import RawSeries

HEADER = ("customer_id", "timestamp", "value")


def _read_rows(path):
    """-> {customer_id: [(timestamp, value, line_no)]}; collects bad lines."""
    per_customer = {}
    bad = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != HEADER:
            raise IngestError(f"{path}: expected header {','.join(HEADER)}", [1])
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                bad.append(line_no)
                continue
            cid, ts_text, value_text = (c.strip() for c in row)
            try:
                ts = dt.datetime.fromisoformat(ts_text)
                value = float(value_text)
            except ValueError:
                bad.append(line_no)
                continue
            if not cid or ts.minute or ts.second or ts.microsecond or not np.isfinite(value):
                bad.append(line_no)
                continue
            per_customer.setdefault(cid, []).append((ts, value, line_no))
    if bad:
        raise IngestError(
            f"{path}: {len(bad)} malformed row(s) at lines {bad[:10]}"
            + ("..." if len(bad) > 10 else ""),
            bad,
        )
    return per_customer


def _check_duplicates(path, cid, rows):
    seen = {}
    for ts, _, line_no in rows:
        seen.setdefault(ts, []).append(line_no)
    offenders = []
    for ts, lines in seen.items():
        if len(lines) == 2 and ts.hour == 2:
            continue  # candidate clock-change duplicate, repaired later
        if len(lines) > 1:
            offenders.append((ts, lines))
    if offenders:
        ts, lines = offenders[0]
        raise IngestError(
            f"{path}: {cid}: duplicated non-clock-change hour {ts.isoformat()} "
            f"at lines {lines} ({len(offenders)} offending timestamp(s))",
            [ln for _, lns in offenders for ln in lns],
        )


def ingest(consumption_csv, temperature_csv):
    """-> (list of RawSeries sorted by customer id, validation report)."""
    cons = _read_rows(consumption_csv)
    temp = _read_rows(temperature_csv)
    only_cons = sorted(set(cons) - set(temp))
    only_temp = sorted(set(temp) - set(cons))
    if only_cons or only_temp:
        raise IngestError(
            "customers present in one file only: "
            f"consumption-only={only_cons[:5]}, temperature-only={only_temp[:5]}"
        )

    series = []
    report = {}
    for cid in sorted(cons):
        c_rows = sorted(cons[cid], key=lambda r: r[0])  # stable: file order on ties
        t_rows = sorted(temp[cid], key=lambda r: r[0])
        _check_duplicates(consumption_csv, cid, c_rows)
        _check_duplicates(temperature_csv, cid, t_rows)
        if [r[0] for r in c_rows] != [r[0] for r in t_rows]:
            raise IngestError(f"{cid}: consumption and temperature timestamps differ")
        timestamps = [r[0] for r in c_rows]
        stamps = set(timestamps)
        span_hours = int((timestamps[-1] - timestamps[0]).total_seconds() // 3600) + 1
        report[cid] = {
            "rows": len(timestamps),
            "duplicate_hours": len(timestamps) - len(stamps),
            "missing_hours": span_hours - len(stamps),
        }
        series.append(
            RawSeries(
                cid,
                timestamps,
                np.array([r[1] for r in c_rows]),
                np.array([r[1] for r in t_rows]),
            )
        )
    return series, report


def write_series_csv(path, entries):
    """Write (customer_id, timestamps, values) triples in the input format."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(HEADER) + "\n")
        for cid, timestamps, values in entries:
            for ts, v in zip(timestamps, values):
                fh.write(f"{cid},{ts.isoformat()},{float(v)!r}\n")

"""Preprocessed dataset file: scaled per-customer arrays, scaling statistics,
the customer split, and the exact holiday table the run used, in one JSON
document with exact float64 array encoding."""

from __future__ import annotations

import datetime as dt
import json
from dataclasses import dataclass

from .errors import ConfigError
from .pipeline import HolidayTable, ScaledCustomer, ScalingParams
from .util import decode_array, encode_array

FORMAT = "loadcast-dataset"
VERSION = 1


@dataclass
class Dataset:
    customers: dict            # customer_id -> ScaledCustomer
    scaling: ScalingParams
    split: dict                # "train"/"test"/"validation" -> [customer_id]
    holidays: HolidayTable
    split_seed: int

    def split_of(self, customer_id: str) -> str:
        for name, ids in self.split.items():
            if customer_id in ids:
                return name
        raise ConfigError(f"customer {customer_id!r} not in any split")


def save_dataset(path, dataset: Dataset):
    doc = {
        "format": FORMAT,
        "version": VERSION,
        "split_seed": dataset.split_seed,
        "scaling": dataset.scaling.to_dict(),
        "split": {k: sorted(v) for k, v in dataset.split.items()},
        "holidays": sorted(d.isoformat() for d in dataset.holidays.dates),
        "customers": {
            cid: {
                "start_date": c.start_date.isoformat(),
                "consumption": encode_array(c.consumption),
                "tempfc": encode_array(c.tempfc),
            }
            for cid, c in sorted(dataset.customers.items())
        },
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True, separators=(",", ":"))


def load_dataset(path) -> Dataset:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format") != FORMAT:
        raise ConfigError(f"{path} is not a preprocessed dataset file")
    if doc.get("version") != VERSION:
        raise ConfigError(f"unsupported dataset version {doc.get('version')}")
    holidays = frozenset(dt.date.fromisoformat(s) for s in doc["holidays"])
    customers = {}
    for cid, entry in doc["customers"].items():
        customers[cid] = ScaledCustomer(
            cid,
            dt.date.fromisoformat(entry["start_date"]),
            decode_array(entry["consumption"]),
            decode_array(entry["tempfc"]),
        )
    return Dataset(
        customers=customers,
        scaling=ScalingParams.from_dict(doc["scaling"]),
        split={k: list(v) for k, v in doc["split"].items()},
        holidays=HolidayTable(holidays, frozenset(d.year for d in holidays)),
        split_seed=int(doc["split_seed"]),
    )

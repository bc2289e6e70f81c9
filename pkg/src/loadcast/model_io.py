"""Versioned model container.

A single JSON file holds every weight (exact base64 float64), the decay
parameters, layer hyperparameters, the scaling statistics from preprocessing,
and the training seed, so loading reproduces predictions bit-exactly.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

from .errors import ConfigError
from .nets import BranchA, BranchAConfig, BranchB, BranchBConfig
from .pipeline import ScalingParams
from .util import decode_array, encode_array

FORMAT = "loadcast-model"
VERSION = 1
PADDING_POLICY = "zero-same"


@dataclass
class ForecastModel:
    branch_a: BranchA
    branch_b: BranchB
    scaling: ScalingParams
    training_seed: int


def _branch_arrays(branch) -> dict:
    return {p.name: encode_array(p.data) for p in branch.params()}


def _load_branch_arrays(branch, arrays: dict):
    for p in branch.params():
        if p.name not in arrays:
            raise ConfigError(f"model file is missing array {p.name!r}")
        data = decode_array(arrays[p.name])
        if data.shape != p.data.shape:
            raise ConfigError(
                f"array {p.name!r} has shape {data.shape}, expected {p.data.shape}"
            )
        p.data = data


def save_model(path, model: ForecastModel):
    doc = {
        "format": FORMAT,
        "version": VERSION,
        "padding_policy": PADDING_POLICY,
        "training_seed": model.training_seed,
        "scaling": model.scaling.to_dict(),
        "branch_a": {"config": asdict(model.branch_a.config), "arrays": _branch_arrays(model.branch_a)},
        "branch_b": {"config": asdict(model.branch_b.config), "arrays": _branch_arrays(model.branch_b)},
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True, separators=(",", ":"))


def load_model(path) -> ForecastModel:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format") != FORMAT:
        raise ConfigError(f"{path} is not a model file")
    if doc.get("version") != VERSION:
        raise ConfigError(f"unsupported model version {doc.get('version')}")
    branch_a = BranchA(BranchAConfig(**doc["branch_a"]["config"]))
    _load_branch_arrays(branch_a, doc["branch_a"]["arrays"])
    branch_b = BranchB(BranchBConfig(**doc["branch_b"]["config"]))
    _load_branch_arrays(branch_b, doc["branch_b"]["arrays"])
    return ForecastModel(
        branch_a=branch_a,
        branch_b=branch_b,
        scaling=ScalingParams.from_dict(doc["scaling"]),
        training_seed=int(doc["training_seed"]),
    )

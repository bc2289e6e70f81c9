"""Seed derivation and array serialization helpers.

All randomness in the library flows through :func:`child_rng` so that every
sampling site owns an independent stream derived from (seed, path) and results
never depend on iteration order or parallel scheduling.
"""

from __future__ import annotations

import base64
import hashlib

import numpy as np


def stable_key(text: str) -> int:
    """Map a string to a stable 64-bit integer (platform independent)."""
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def child_rng(seed: int, *path) -> np.random.Generator:
    """Independent generator for the stream identified by (seed, *path).

    Path components may be ints or strings; strings are hashed with
    :func:`stable_key`.
    """
    entropy = [int(seed) & 0xFFFFFFFFFFFFFFFF]
    for part in path:
        if isinstance(part, str):
            entropy.append(stable_key(part))
        else:
            entropy.append(int(part) & 0xFFFFFFFFFFFFFFFF)
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


def encode_array(a: np.ndarray) -> dict:
    """JSON-safe exact encoding of a float64 array (little-endian base64)."""
    a = np.ascontiguousarray(a, dtype="<f8")
    return {
        "shape": list(a.shape),
        "dtype": "<f8",
        "data": base64.b64encode(a.tobytes()).decode("ascii"),
    }


def decode_array(d: dict) -> np.ndarray:
    if d.get("dtype") != "<f8":
        raise ValueError(f"unsupported array dtype {d.get('dtype')!r}")
    raw = base64.b64decode(d["data"])
    a = np.frombuffer(raw, dtype="<f8").astype(np.float64)
    return a.reshape(d["shape"])

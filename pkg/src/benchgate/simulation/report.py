"""Simulation report container and per-run RNG streams."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np


def run_rng(seed: int, run_index: int, stream: int = 0) -> np.random.Generator:
    """Independent generator for one run, a pure function of (seed, stream, run)."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(stream, run_index)))


def map_runs(fn: Callable[[int], Any], n_runs: int, workers: int = 1) -> list:
    """Evaluate ``fn(run_index)`` for every run, returned in run order."""
    if workers <= 1 or n_runs <= 1:
        return [fn(r) for r in range(n_runs)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(n_runs), chunksize=max(1, n_runs // (4 * workers))))


@dataclass
class SimReport:
    kind: str
    config: dict
    seed: int
    records: list[dict]
    aggregates: dict
    curves: list = field(default_factory=list, repr=False)  # (kind, run, Curve)

    def payload(self) -> dict:
        return {
            "kind": self.kind,
            "config": self.config,
            "seed": self.seed,
            "records": self.records,
            "aggregates": self.aggregates,
        }


def mean_sd(values) -> dict:
    arr = np.asarray(values, dtype=float)
    return {
        "mean": float(arr.mean()),
        "sd": float(arr.std(ddof=1)) if arr.size > 1 else 0.0,
    }

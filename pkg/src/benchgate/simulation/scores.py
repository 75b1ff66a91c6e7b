"""Score-distribution simulations contrasting ROC, PR and enrichment.

Positive and negative scores are drawn from known distributions at a
heavy class imbalance (100 actives against 10,000 inactives by default),
so every metric is evaluated on a classifier whose behaviour is known
exactly.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from functools import partial

import numpy as np

from ..errors import InvalidArgument
from ..metrics import (
    PredictionSet,
    auc_prc,
    auc_roc,
    enrichment_at,
    enrichment_curve,
    pr_curve,
    roc_curve,
    roc_enrichment,
)
from .report import SimReport, map_runs, mean_sd, run_rng

SUMMARY_FRACTIONS = (0.005, 0.01, 0.02, 0.05)


@dataclass(frozen=True)
class ScoreDistribution:
    kind: str
    params: tuple[float, float]

    def __post_init__(self):
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        if self.kind not in ("normal", "beta") or len(self.params) != 2:
            raise InvalidArgument(f"unsupported distribution {self.kind!r}{self.params}")
        a, b = self.params
        if self.kind == "normal" and not b > 0:
            raise InvalidArgument("normal sigma must be positive")
        if self.kind == "beta" and not (a > 0 and b > 0):
            raise InvalidArgument("beta parameters must be positive")
        if not np.isfinite(self.params).all():
            raise InvalidArgument("distribution parameters must be finite")

    @classmethod
    def normal(cls, mu: float, sigma: float) -> "ScoreDistribution":
        return cls("normal", (mu, sigma))

    @classmethod
    def beta(cls, a: float, b: float) -> "ScoreDistribution":
        return cls("beta", (a, b))

    @classmethod
    def parse(cls, text: str) -> "ScoreDistribution":
        """Parse ``normal:MU,SIGMA`` or ``beta:A,B``."""
        try:
            kind, rest = text.split(":", 1)
            a, b = (float(v) for v in rest.split(","))
        except ValueError:
            raise InvalidArgument(
                f"cannot parse distribution {text!r}; expected normal:MU,SIGMA or beta:A,B"
            ) from None
        return cls(kind.strip().lower(), (a, b))

    def __str__(self):
        return f"{self.kind}:{self.params[0]:g},{self.params[1]:g}"


def beta_a1_inverse_cdf(u, a: float):
    """Inverse CDF of Beta(a, 1), whose CDF is x**a."""
    return np.power(u, 1.0 / a)


def sample_scores(dist: ScoreDistribution, n: int, rng: np.random.Generator) -> np.ndarray:
    if n < 1:
        raise InvalidArgument("need at least one sample")
    p, q = dist.params
    if dist.kind == "normal":
        return p + q * rng.standard_normal(n)
    if q == 1.0:
        return beta_a1_inverse_cdf(rng.random(n), p)
    x = rng.standard_gamma(p, n)
    y = rng.standard_gamma(q, n)
    return x / (x + y)


@dataclass(frozen=True)
class ScoreSimConfig:
    pos_dist: ScoreDistribution = field(default_factory=lambda: ScoreDistribution.normal(0.6, 0.1))
    neg_dist: ScoreDistribution = field(default_factory=lambda: ScoreDistribution.normal(0.4, 0.1))
    n_pos: int = 100
    n_neg: int = 10_000
    runs: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.n_pos < 1 or self.n_neg < 1 or self.runs < 1:
            raise InvalidArgument("n_pos, n_neg and runs must all be at least 1")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pos_dist"] = str(self.pos_dist)
        d["neg_dist"] = str(self.neg_dist)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ScoreSimConfig":
        d = dict(d)
        d["pos_dist"] = ScoreDistribution.parse(d["pos_dist"])
        d["neg_dist"] = ScoreDistribution.parse(d["neg_dist"])
        return cls(**d)


def _one_run(config: ScoreSimConfig, run: int):
    rng = run_rng(config.seed, run)
    pos = sample_scores(config.pos_dist, config.n_pos, rng)
    neg = sample_scores(config.neg_dist, config.n_neg, rng)
    preds = PredictionSet.from_pairs(pos, neg)
    record = {"run": run, "auc_roc": auc_roc(preds), "auc_prc": auc_prc(preds)}
    for x in SUMMARY_FRACTIONS:
        record[f"fraction_found@{x:g}"] = enrichment_at(preds, x, "fraction_found")
        record[f"ef_ratio@{x:g}"] = enrichment_at(preds, x, "ef_ratio")
        record[f"roc_enrichment@{x:g}"] = roc_enrichment(preds, x)
    curves = [
        roc_curve(preds),
        pr_curve(preds),
        enrichment_curve(preds, "fraction_found"),
        enrichment_curve(preds, "ef_ratio"),
    ]
    return record, curves


def run_score_simulation(config: ScoreSimConfig, workers: int = 1) -> SimReport:
    results = map_runs(partial(_one_run, config), config.runs, workers)
    records = [r for r, _ in results]
    curves = [(c.kind, run, c) for run, (_, cs) in enumerate(results) for c in cs]
    metric_keys = [k for k in records[0] if k != "run"]
    aggregates = {k: mean_sd([r[k] for r in records]) for k in metric_keys}
    return SimReport("score-dist", config.to_dict(), config.seed, records, aggregates, curves)

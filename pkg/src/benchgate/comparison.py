"""Paired comparison of methods across assays or folds."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy import stats

from .errors import AllTies, DegenerateVariance, InvalidArgument, ShapeMismatch
from .uncertainty import ConfidenceInterval, wilson_interval

ALTERNATIVES = ("two_sided", "greater", "less")
WILCOXON_EXACT_MAX_N = 25
WIN_ROUNDING_DECIMALS = 6
TIE = "Tie"


@dataclass(frozen=True, eq=False)
class PairedFoldScores:
    unit_ids: tuple[str, ...]
    a_values: np.ndarray
    b_values: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a_values, dtype=float)
        b = np.asarray(self.b_values, dtype=float)
        ids = tuple(str(u) for u in self.unit_ids)
        if a.ndim != 1 or a.shape != b.shape or len(ids) != a.size:
            raise ShapeMismatch("unit_ids, a_values and b_values must have equal length")
        if a.size == 0:
            raise InvalidArgument("need at least one paired unit")
        if not (np.isfinite(a).all() and np.isfinite(b).all()):
            raise InvalidArgument("paired values must be finite")
        object.__setattr__(self, "unit_ids", ids)
        object.__setattr__(self, "a_values", a)
        object.__setattr__(self, "b_values", b)

    @classmethod
    def from_values(cls, a_values, b_values) -> "PairedFoldScores":
        return cls(tuple(str(i) for i in range(len(a_values))), a_values, b_values)

    def __len__(self):
        return self.a_values.size

    def swapped(self) -> "PairedFoldScores":
        return PairedFoldScores(self.unit_ids, self.b_values, self.a_values)


@dataclass(frozen=True)
class TestResult:
    test: str
    statistic: float
    p_value: float
    alternative: str
    n_used: int
    n_ties_dropped: int
    win_proportion: float | None = None
    win_ci: ConfidenceInterval | None = None

    __test__ = False  # not a pytest class

    def to_dict(self) -> dict:
        return {
            "test": self.test,
            "statistic": self.statistic,
            "p_value": self.p_value,
            "alternative": self.alternative,
            "n_used": self.n_used,
            "n_ties_dropped": self.n_ties_dropped,
            "win_proportion": self.win_proportion,
            "win_ci": self.win_ci.to_dict() if self.win_ci is not None else None,
        }


def _check_alternative(alternative: str) -> str:
    alternative = alternative.replace("-", "_")
    if alternative not in ALTERNATIVES:
        raise InvalidArgument(f"alternative must be one of {ALTERNATIVES}")
    return alternative


def _combine_tails(upper: float, lower: float, alternative: str) -> float:
    """upper = P(T >= t), lower = P(T <= t) under the null."""
    if alternative == "greater":
        p = upper
    elif alternative == "less":
        p = lower
    else:
        p = 2.0 * min(upper, lower)
    return min(1.0, max(0.0, p))


def sign_test(
    paired: PairedFoldScores, alternative: str = "two_sided", level: float = 0.95
) -> TestResult:
    """Exact binomial sign test on wins of a over b; exact ties are dropped."""
    alternative = _check_alternative(alternative)
    diff = paired.a_values - paired.b_values
    n_used = int(np.count_nonzero(diff))
    if n_used == 0:
        raise AllTies("every pair is tied; the sign test is undefined")
    wins = int(np.count_nonzero(diff > 0))
    upper = float(stats.binom.sf(wins - 1, n_used, 0.5))
    lower = float(stats.binom.cdf(wins, n_used, 0.5))
    return TestResult(
        test="sign",
        statistic=float(wins),
        p_value=_combine_tails(upper, lower, alternative),
        alternative=alternative,
        n_used=n_used,
        n_ties_dropped=len(paired) - n_used,
        win_proportion=wins / n_used,
        win_ci=wilson_interval(wins, n_used, level),
    )


def signed_rank_null_counts(doubled_ranks: Sequence[int]) -> np.ndarray:
    """Counts of each doubled W+ value over all 2**n sign assignments."""
    total = int(sum(doubled_ranks))
    counts = np.zeros(total + 1, dtype=object)
    counts[0] = 1
    reach = 0
    for r in doubled_ranks:
        r = int(r)
        counts[r : reach + r + 1] = counts[r : reach + r + 1] + counts[: reach + 1]
        reach += r
    return counts


def wilcoxon_signed_rank(paired: PairedFoldScores, alternative: str = "two_sided") -> TestResult:
    """Wilcoxon signed-rank test on a - b with zero differences dropped.

    The statistic is W+, the rank sum of positive differences (midranks for
    tied magnitudes). The null is exact for up to 25 nonzero differences,
    otherwise normal with tie and continuity corrections.
    """
    alternative = _check_alternative(alternative)
    diff = paired.a_values - paired.b_values
    nz = diff[diff != 0]
    n = nz.size
    if n == 0:
        raise AllTies("every difference is zero; the signed-rank test is undefined")
    ranks = stats.rankdata(np.abs(nz), method="average")
    doubled = np.rint(2 * ranks).astype(np.int64)
    w2 = int(doubled[nz > 0].sum())
    if n <= WILCOXON_EXACT_MAX_N:
        counts = signed_rank_null_counts(doubled)
        total = sum(counts)
        upper = float(sum(counts[w2:]) / total)
        lower = float(sum(counts[: w2 + 1]) / total)
        p = _combine_tails(upper, lower, alternative)
    else:
        w = w2 / 2.0
        mean = n * (n + 1) / 4.0
        _, tie_sizes = np.unique(np.abs(nz), return_counts=True)
        var = n * (n + 1) * (2 * n + 1) / 24.0 - np.sum(tie_sizes**3 - tie_sizes) / 48.0
        sd = math.sqrt(var)
        if alternative == "greater":
            p = float(stats.norm.sf((w - mean - 0.5) / sd))
        elif alternative == "less":
            p = float(stats.norm.cdf((w - mean + 0.5) / sd))
        else:
            z = max(abs(w - mean) - 0.5, 0.0) / sd
            p = min(1.0, 2.0 * float(stats.norm.sf(z)))
    return TestResult(
        test="wilcoxon",
        statistic=w2 / 2.0,
        p_value=p,
        alternative=alternative,
        n_used=n,
        n_ties_dropped=len(paired) - n,
    )


def effect_size(a_mean: float, a_sem: float, b_mean: float, b_sem: float, n_folds: int) -> float:
    """Cohen's d from fold means and SEMs, equal fold counts per method.

    Fold standard deviations are rebuilt as ``sem * sqrt(n_folds)``.
    """
    if n_folds < 2:
        raise InvalidArgument("effect_size needs n_folds >= 2")
    if a_sem < 0 or b_sem < 0:
        raise InvalidArgument("SEMs must be nonnegative")
    if a_sem == 0 and b_sem == 0:
        raise DegenerateVariance("both SEMs are zero; the pooled sd is zero")
    sa2 = a_sem * a_sem * n_folds
    sb2 = b_sem * b_sem * n_folds
    return abs(a_mean - b_mean) / math.sqrt((sa2 + sb2) / 2.0)


def effect_size_from_folds(a_values: Sequence[float], b_values: Sequence[float]) -> float:
    a = np.asarray(a_values, dtype=float)
    b = np.asarray(b_values, dtype=float)
    if a.size != b.size:
        raise ShapeMismatch("fold lists must have equal length")
    n = a.size
    if n < 2:
        raise InvalidArgument("effect_size needs at least 2 folds")
    return effect_size(
        a.mean(), a.std(ddof=1) / math.sqrt(n), b.mean(), b.std(ddof=1) / math.sqrt(n), n
    )


@dataclass(frozen=True)
class WinTable:
    fractions: dict[str, float]
    tie_fraction: float
    n_units: int
    wins: dict[str, int] = field(default_factory=dict)
    ties: int = 0

    def rows(self) -> list[tuple[str, float]]:
        """Methods by descending fraction (name breaks ties), Tie row last."""
        ordered = sorted(self.fractions.items(), key=lambda kv: (-kv[1], kv[0]))
        return ordered + [(TIE, self.tie_fraction)]

    def to_dict(self) -> dict:
        return {
            "n_units": self.n_units,
            "rows": [
                {
                    "method": m,
                    "fraction_best": f,
                    "count": self.ties if m == TIE else self.wins.get(m, 0),
                }
                for m, f in self.rows()
            ],
        }


def tabulate_wins(per_fold_scores: Mapping[str, Sequence[float]]) -> WinTable:
    """Fraction of folds on which each method is the unique best.

    Values are rounded to 6 decimals before comparison; a shared maximum
    counts toward the Tie row.
    """
    if len(per_fold_scores) < 1:
        raise InvalidArgument("tabulate_wins needs at least one method")
    methods = list(per_fold_scores)
    lengths = {len(v) for v in per_fold_scores.values()}
    if len(lengths) != 1:
        raise ShapeMismatch(f"per-method score lists differ in length: {sorted(lengths)}")
    (n_units,) = lengths
    if n_units < 1:
        raise InvalidArgument("need at least one fold")
    matrix = np.round(
        np.array([np.asarray(per_fold_scores[m], dtype=float) for m in methods]),
        WIN_ROUNDING_DECIMALS,
    )
    best = matrix.max(axis=0)
    is_best = matrix == best
    n_best = is_best.sum(axis=0)
    wins = {m: int(np.count_nonzero(is_best[i] & (n_best == 1))) for i, m in enumerate(methods)}
    ties = int(np.count_nonzero(n_best > 1))
    return WinTable(
        fractions={m: w / n_units for m, w in wins.items()},
        tie_fraction=ties / n_units,
        n_units=n_units,
        wins=wins,
        ties=ties,
    )


def pairwise_scatter(
    paired: PairedFoldScores, weights: Sequence[float] | None = None
) -> list[tuple[float, float, float]]:
    """(a, b, size) triples for an a-versus-b scatter; size defaults to 1."""
    if weights is None or len(weights) == 0:
        sizes = [1.0] * len(paired)
    else:
        if len(weights) != len(paired):
            raise ShapeMismatch("weights must match the number of paired units")
        sizes = [float(w) for w in weights]
    return [
        (float(a), float(b), s)
        for a, b, s in zip(paired.a_values, paired.b_values, sizes)
    ]

"""Standard errors, confidence intervals and small-sample null distributions."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Sequence

import numpy as np
from scipy import special, stats

from .errors import InvalidArgument
from .metrics import PredictionSet, auc_roc

EXACT_ENUMERATION_CAP = 400

UNDEFINED_CI = "(?, ?)"


def normal_quantile(p: float) -> float:
    return float(special.ndtri(p))


def two_sided_z(level: float) -> float:
    _check_level(level)
    return normal_quantile(0.5 + level / 2.0)


def t_quantile(p: float, df: float) -> float:
    return float(stats.t.ppf(p, df))


def _check_level(level: float) -> None:
    if not 0.0 < level < 1.0:
        raise InvalidArgument(f"level must lie in (0, 1), got {level}")


@dataclass(frozen=True)
class ConfidenceInterval:
    lower: float
    upper: float
    level: float

    def __post_init__(self):
        if self.lower > self.upper:
            raise InvalidArgument(f"interval lower {self.lower} exceeds upper {self.upper}")
        _check_level(self.level)

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def contains(self, value: float) -> bool:
        return self.lower <= value <= self.upper

    def as_tuple(self) -> tuple[float, float]:
        return (self.lower, self.upper)

    def to_dict(self) -> dict:
        return {"lower": self.lower, "upper": self.upper, "level": self.level}


def format_ci(ci: ConfidenceInterval | None, digits: int = 3) -> str:
    if ci is None:
        return UNDEFINED_CI
    return f"({ci.lower:.{digits}f}, {ci.upper:.{digits}f})"


def hanley_mcneil_se(auc: float, n_pos: int, n_neg: int) -> float:
    """Hanley-McNeil (1982) standard error of an AUC estimate."""
    if n_pos < 1 or n_neg < 1:
        raise InvalidArgument("hanley_mcneil_se needs n_pos >= 1 and n_neg >= 1")
    if not 0.0 <= auc <= 1.0:
        raise InvalidArgument(f"auc must lie in [0, 1], got {auc}")
    a2 = auc * auc
    q1 = auc / (2.0 - auc)
    q2 = 2.0 * a2 / (1.0 + auc)
    var = (auc * (1.0 - auc) + (n_pos - 1) * (q1 - a2) + (n_neg - 1) * (q2 - a2)) / (
        n_pos * n_neg
    )
    # q1 - a2 and q2 - a2 are >= 0 analytically; rounding can push var to -1e-18
    return math.sqrt(max(var, 0.0))


@dataclass(frozen=True)
class AucEstimate:
    value: float
    n_pos: int
    n_neg: int
    se: float | None = None
    ci: ConfidenceInterval | None = None

    @classmethod
    def from_counts(cls, value: float, n_pos: int, n_neg: int, level: float = 0.95) -> "AucEstimate":
        if n_pos < 1 or n_neg < 1:
            return cls(value, n_pos, n_neg)
        est = cls(value, n_pos, n_neg, hanley_mcneil_se(value, n_pos, n_neg))
        return cls(value, n_pos, n_neg, est.se, auc_ci(est, level))

    @classmethod
    def from_predictions(cls, preds: PredictionSet, level: float = 0.95) -> "AucEstimate":
        return cls.from_counts(auc_roc(preds), preds.n_pos, preds.n_neg, level)

    def to_dict(self) -> dict:
        return {
            "auc_roc": self.value,
            "n_pos": self.n_pos,
            "n_neg": self.n_neg,
            "se": self.se,
            "ci": self.ci.to_dict() if self.ci is not None else None,
            "ci_text": format_ci(self.ci),
        }


def auc_ci(est: AucEstimate, level: float = 0.95) -> ConfidenceInterval | None:
    """Normal interval ``value +/- z * se`` clipped to [0, 1].

    Returns None when either class has at most one member: the standard
    error has no usable degrees of freedom there.
    """
    _check_level(level)
    if est.n_pos <= 1 or est.n_neg <= 1:
        return None
    se = est.se if est.se is not None else hanley_mcneil_se(est.value, est.n_pos, est.n_neg)
    half = two_sided_z(level) * se
    return ConfidenceInterval(max(0.0, est.value - half), min(1.0, est.value + half), level)


@dataclass(frozen=True, eq=False)
class DiscreteDistribution:
    support: np.ndarray
    probabilities: np.ndarray
    counts: tuple[int, ...] | None = None

    def __post_init__(self):
        support = np.asarray(self.support, dtype=np.float64)
        probs = np.asarray(self.probabilities, dtype=np.float64)
        if support.shape != probs.shape or support.ndim != 1 or support.size == 0:
            raise InvalidArgument("support and probabilities must be matching 1-D arrays")
        if np.any(np.diff(support) <= 0):
            raise InvalidArgument("support must be strictly increasing")
        if np.any(probs < 0) or abs(math.fsum(probs) - 1.0) > 1e-12:
            raise InvalidArgument("probabilities must be nonnegative and sum to 1")
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "probabilities", probs)

    def _exact_moment(self, power: int) -> Fraction | None:
        if self.counts is None:
            return None
        # support values are u / scale with integer u; recover them exactly
        scale = len(self.counts) - 1
        total = sum(self.counts)
        if scale == 0:
            return Fraction(0)
        num = sum(c * u**power for u, c in enumerate(self.counts))
        return Fraction(num, total * scale**power)

    @property
    def mean(self) -> float:
        exact = self._exact_moment(1)
        if exact is not None:
            return float(exact)
        return float(np.dot(self.support, self.probabilities))

    @property
    def variance(self) -> float:
        m1, m2 = self._exact_moment(1), self._exact_moment(2)
        if m1 is not None:
            return float(m2 - m1 * m1)
        mu = self.mean
        return float(np.dot((self.support - mu) ** 2, self.probabilities))

    @property
    def sd(self) -> float:
        return math.sqrt(self.variance)

    def cdf(self, x: float) -> float:
        return float(self.probabilities[self.support <= x + 1e-12].sum())

    def sf(self, x: float) -> float:
        """P(X >= x)."""
        return float(self.probabilities[self.support >= x - 1e-12].sum())


@dataclass(frozen=True)
class NormalNullApproximation:
    """Large-sample null of AUC under random ranking (no ties)."""

    n_pos: int
    n_neg: int

    mean = 0.5

    @property
    def variance(self) -> float:
        return (self.n_pos + self.n_neg + 1) / (12.0 * self.n_pos * self.n_neg)

    @property
    def sd(self) -> float:
        return math.sqrt(self.variance)

    def cdf(self, x: float) -> float:
        return float(stats.norm.cdf(x, 0.5, self.sd))

    def sf(self, x: float) -> float:
        return float(stats.norm.sf(x, 0.5, self.sd))


def mann_whitney_null_counts(n_pos: int, n_neg: int) -> list[int]:
    """Number of label orderings giving each U = 0..n_pos*n_neg.

    Uses f(m, n; u) = f(m - 1, n; u - n) + f(m, n - 1; u), with f(0, n) =
    f(m, 0) = [1].
    """
    prev = [[1] for _ in range(n_neg + 1)]  # row m = 0
    for m in range(1, n_pos + 1):
        row = [[1]]
        for n in range(1, n_neg + 1):
            left = prev[n]  # f(m-1, n)
            down = row[n - 1]  # f(m, n-1)
            cur = [0] * (m * n + 1)
            for u, c in enumerate(down):
                cur[u] += c
            for u, c in enumerate(left):
                cur[u + n] += c
            row.append(cur)
        prev = row
    return prev[n_neg]


def exact_null_auc_distribution(n_pos: int, n_neg: int, cap: int = EXACT_ENUMERATION_CAP):
    """Distribution of AUC under uniformly random ranking of the two classes.

    Exact when ``n_pos * n_neg <= cap``; otherwise a
    :class:`NormalNullApproximation` with mean 1/2.
    """
    if n_pos < 1 or n_neg < 1:
        raise InvalidArgument("exact_null_auc_distribution needs n_pos >= 1 and n_neg >= 1")
    mn = n_pos * n_neg
    if mn > cap:
        return NormalNullApproximation(n_pos, n_neg)
    counts = mann_whitney_null_counts(n_pos, n_neg)
    total = sum(counts)
    probs = np.array([c / total for c in counts])
    support = np.arange(mn + 1) / mn
    return DiscreteDistribution(support, probs, tuple(counts))


class FoldSummary(NamedTuple):
    mean: float
    sem: float
    ci: ConfidenceInterval


def fold_mean_ci(fold_values: Sequence[float], level: float = 0.95, ddof: int = 1) -> FoldSummary:
    """Mean, SEM and t interval over cross-validation folds.

    The SEM uses the sample (n - 1) variance unless ``ddof=0`` is given.
    The interval uses n_folds - 1 degrees of freedom and is not clipped, so
    bounds outside [0, 1] stay visible.
    """
    values = np.asarray(fold_values, dtype=float)
    if values.ndim != 1 or values.size < 2:
        raise InvalidArgument("fold_mean_ci needs at least 2 fold values")
    if not np.isfinite(values).all():
        raise InvalidArgument("fold values must be finite")
    _check_level(level)
    if ddof not in (0, 1):
        raise InvalidArgument("ddof must be 0 or 1")
    n = values.size
    mean = float(values.mean())
    sem = 0.0 if np.ptp(values) == 0 else float(values.std(ddof=ddof) / math.sqrt(n))
    half = t_quantile(0.5 + level / 2.0, n - 1) * sem
    return FoldSummary(mean, sem, ConfidenceInterval(mean - half, mean + half, level))


def wilson_interval(successes: int, n: int, level: float = 0.95) -> ConfidenceInterval:
    """Wilson score interval for a binomial proportion."""
    if n < 1 or not 0 <= successes <= n:
        raise InvalidArgument(f"need 0 <= successes <= n and n >= 1 (got {successes}/{n})")
    z = two_sided_z(level)
    p = successes / n
    z2 = z * z
    denom = 1.0 + z2 / n
    center = (p + z2 / (2.0 * n)) / denom
    half = z * math.sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom
    # the bounds touch 0 and 1 exactly at the extremes; keep rounding out
    lower = 0.0 if successes == 0 else max(0.0, center - half)
    upper = 1.0 if successes == n else min(1.0, center + half)
    return ConfidenceInterval(lower, upper, level)

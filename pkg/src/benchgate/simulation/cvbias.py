"""Cross-validation bias experiment.

Two isotropic Gaussian classes are separated just enough that a linear
SVM trained on ``n_train`` points reaches the target AUC on fresh data.
Each run compares the k-fold CV estimate of AUC with the AUC of the model
refit on all training points and scored on a large independent test set,
and records whether a t interval around the CV mean covers that value.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass
from functools import partial

import numpy as np
from scipy import stats

from ..errors import ConvergenceWarning, InvalidArgument, NoConvergence
from ..metrics import PredictionSet, auc_roc
from ..splitting import kfold
from ..uncertainty import normal_quantile, t_quantile
from .report import SimReport, map_runs, run_rng
from .svm import DEFAULT_C, DEFAULT_MAX_ITER, DEFAULT_TOL, score, train_linear_svm

RUN_STREAM = 0
CALIBRATION_STREAM = 1
LARGE_ERROR = 0.05


def make_gaussian_pair_dataset(
    dim: int, separation: float, n: int, prevalence: float, rng: np.random.Generator
):
    """Unit-variance classes whose means differ by ``separation`` along axis 0.

    Labels are drawn first and the noise second, so two calls with the same
    generator state share labels and noise and differ only in the shift.
    """
    if dim < 1 or n < 1:
        raise InvalidArgument("dim and n must be at least 1")
    if separation < 0:
        raise InvalidArgument("separation must be nonnegative")
    if not 0.0 < prevalence < 1.0:
        raise InvalidArgument("prevalence must lie in (0, 1)")
    labels = rng.random(n) < prevalence
    vectors = rng.standard_normal((n, dim))
    vectors[:, 0] += np.where(labels, separation / 2.0, -separation / 2.0)
    return vectors, labels


def oracle_auc(separation: float) -> float:
    """AUC of the Bayes projection onto the mean-difference axis."""
    return float(stats.norm.cdf(separation / math.sqrt(2.0)))


def asymptotic_separation(target_auc: float) -> float:
    return math.sqrt(2.0) * normal_quantile(target_auc)


@dataclass(frozen=True)
class SvmParams:
    C: float = DEFAULT_C
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER


def _fit(vectors, labels, params: SvmParams, seed: int):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        return train_linear_svm(vectors, labels, params.C, params.tol, params.max_iter, seed)


def _auc(labels, scores) -> float:
    return auc_roc(PredictionSet(labels, scores))


def _calibration_auc(separation, dim, n_train, n_test, prevalence, params, seed, run):
    rng = run_rng(seed, run, CALIBRATION_STREAM)
    X, y = make_gaussian_pair_dataset(dim, separation, n_train, prevalence, rng)
    Xt, yt = make_gaussian_pair_dataset(dim, separation, n_test, prevalence, rng)
    if y.all() or not y.any() or yt.all() or not yt.any():
        return None
    model = _fit(X, y, params, run)
    return _auc(yt, score(model, Xt))


def calibrated_mean_auc(
    separation: float,
    dim: int,
    n_train: int,
    *,
    n_test: int = 10_000,
    prevalence: float = 0.5,
    params: SvmParams = SvmParams(),
    runs: int = 40,
    seed: int = 0,
) -> float:
    """Mean held-out AUC of SVMs trained on ``n_train`` points at this separation.

    Every separation reuses the same per-run noise, so the result is a
    smooth function of ``separation``.
    """
    aucs = [
        _calibration_auc(separation, dim, n_train, n_test, prevalence, params, seed, r)
        for r in range(runs)
    ]
    aucs = [a for a in aucs if a is not None]
    return float(np.mean(aucs))


def calibrate_separation(
    target_auc: float,
    dim: int,
    n_train: int,
    *,
    n_test: int = 10_000,
    prevalence: float = 0.5,
    params: SvmParams = SvmParams(),
    runs: int = 40,
    seed: int = 0,
    tolerance: float = 0.005,
    max_steps: int = 40,
) -> float:
    """Bisect the class separation until the trained SVM hits ``target_auc``."""
    if target_auc == 0.5:
        return 0.0
    if not 0.5 < target_auc < 1.0:
        raise InvalidArgument("target_auc must lie in (0.5, 1)")
    if runs < 20:
        raise InvalidArgument("calibration needs at least 20 runs")

    def f(sep):
        return calibrated_mean_auc(
            sep, dim, n_train, n_test=n_test, prevalence=prevalence,
            params=params, runs=runs, seed=seed,
        )

    lo, hi = 0.0, asymptotic_separation(target_auc)
    f_hi = f(hi)
    steps = 0
    while f_hi < target_auc:
        lo, hi = hi, 2.0 * hi
        f_hi = f(hi)
        steps += 1
        if steps > max_steps:
            raise NoConvergence(f"no separation reaches AUC {target_auc} (last {f_hi:.4f})")
    best, best_gap = hi, abs(f_hi - target_auc)
    for _ in range(max_steps):
        mid = 0.5 * (lo + hi)
        f_mid = f(mid)
        gap = abs(f_mid - target_auc)
        if gap < best_gap:
            best, best_gap = mid, gap
        if gap <= tolerance / 10.0 or hi - lo < 1e-4:
            break
        if f_mid < target_auc:
            lo = mid
        else:
            hi = mid
    if best_gap > tolerance:
        raise NoConvergence(
            f"calibration ended {best_gap:.4f} away from target AUC {target_auc}"
        )
    return float(best)


@dataclass(frozen=True)
class CvBiasConfig:
    n_train: int = 300
    n_test: int = 10_000
    dim: int = 30
    target_auc: float = 0.75
    k_folds: int = 3
    runs: int = 1000
    ci_level: float = 0.95
    seed: int = 0
    prevalence: float = 0.5
    C: float = DEFAULT_C
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER
    calibration_runs: int = 40
    calibration_n_train: int | None = None
    separation: float | None = None
    sem_ddof: int = 0

    def __post_init__(self):
        if self.k_folds < 2:
            raise InvalidArgument("k_folds must be at least 2")
        if self.n_train < 3 * self.k_folds:
            raise InvalidArgument("n_train must be at least 3 * k_folds")
        if not 0.5 < self.target_auc < 1.0:
            raise InvalidArgument("target_auc must lie in (0.5, 1)")
        if self.runs < 1 or self.n_test < 2 or self.dim < 1:
            raise InvalidArgument("runs, n_test and dim must be positive")
        if not 0.0 < self.ci_level < 1.0:
            raise InvalidArgument("ci_level must lie in (0, 1)")
        if self.sem_ddof not in (0, 1):
            raise InvalidArgument("sem_ddof must be 0 or 1")

    @property
    def svm_params(self) -> SvmParams:
        return SvmParams(self.C, self.tol, self.max_iter)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "CvBiasConfig":
        return cls(**d)


def _has_both(labels) -> bool:
    return bool(labels.any()) and not bool(labels.all())


def _cv_folds(labels, k, rng):
    """Plain k-fold; redrawn until every train and test part holds both classes."""
    n = labels.size
    for _ in range(100):
        folds = kfold(n, k, int(rng.integers(2**31)))
        ok = True
        for test in folds:
            mask = np.zeros(n, bool)
            mask[test] = True
            if not (_has_both(labels[mask]) and _has_both(labels[~mask])):
                ok = False
                break
        if ok:
            return folds
    raise InvalidArgument("could not draw folds with both classes in every part")


def _cv_run(config: CvBiasConfig, separation: float, t_mult: float, run: int) -> dict:
    rng = run_rng(config.seed, run, RUN_STREAM)
    params = config.svm_params
    X, y = make_gaussian_pair_dataset(config.dim, separation, config.n_train, config.prevalence, rng)
    while not _has_both(y):
        X, y = make_gaussian_pair_dataset(config.dim, separation, config.n_train, config.prevalence, rng)
    folds = _cv_folds(y, config.k_folds, rng)
    fold_aucs = []
    for f, test in enumerate(folds):
        mask = np.zeros(config.n_train, bool)
        mask[test] = True
        model = _fit(X[~mask], y[~mask], params, f)
        fold_aucs.append(_auc(y[mask], score(model, X[mask])))
    cv_mean = float(np.mean(fold_aucs))
    sem = float(np.std(fold_aucs, ddof=config.sem_ddof) / math.sqrt(config.k_folds))

    full = _fit(X, y, params, config.k_folds)
    Xt, yt = make_gaussian_pair_dataset(config.dim, separation, config.n_test, config.prevalence, rng)
    true_auc = _auc(yt, score(full, Xt))
    error = cv_mean - true_auc
    return {
        "run": run,
        "fold_aucs": fold_aucs,
        "cv_mean": cv_mean,
        "sem": sem,
        "true_auc": true_auc,
        "error": error,
        "covered_t": bool(abs(error) <= t_mult * sem),
        "covered_naive": bool(abs(error) <= 2.0 * sem),
    }


def aggregate_cv_records(records: list[dict]) -> dict:
    errors = np.array([r["error"] for r in records])
    cv = np.array([r["cv_mean"] for r in records])
    true = np.array([r["true_auc"] for r in records])
    return {
        "runs": len(records),
        "mean_cv_auc": float(cv.mean()),
        "mean_true_auc": float(true.mean()),
        "mean_error": float(errors.mean()),
        "error_p2.5": float(np.percentile(errors, 2.5)),
        "error_p97.5": float(np.percentile(errors, 97.5)),
        "error_skewness": float(stats.skew(errors)) if errors.size > 2 else 0.0,
        "fraction_abs_error_gt_0.05": float(np.mean(np.abs(errors) > LARGE_ERROR)),
        "coverage_t": float(np.mean([r["covered_t"] for r in records])),
        "coverage_naive_2sem": float(np.mean([r["covered_naive"] for r in records])),
    }


def run_cv_bias_simulation(config: CvBiasConfig, workers: int = 1) -> SimReport:
    separation = config.separation
    if separation is None:
        separation = calibrate_separation(
            config.target_auc,
            config.dim,
            config.calibration_n_train or config.n_train,
            n_test=config.n_test,
            prevalence=config.prevalence,
            params=config.svm_params,
            runs=config.calibration_runs,
            seed=config.seed,
        )
    t_mult = t_quantile(0.5 + config.ci_level / 2.0, config.k_folds - 1)
    records = map_runs(partial(_cv_run, config, separation, t_mult), config.runs, workers)
    aggregates = aggregate_cv_records(records)
    aggregates["separation"] = separation
    aggregates["t_multiplier"] = t_mult
    return SimReport("cv-bias", config.to_dict(), config.seed, records, aggregates)

"""Monte-Carlo experiments: score-distribution metrics and CV bias."""

from .cvbias import (
    CvBiasConfig,
    SvmParams,
    aggregate_cv_records,
    calibrate_separation,
    calibrated_mean_auc,
    make_gaussian_pair_dataset,
    oracle_auc,
    run_cv_bias_simulation,
)
from .report import SimReport, run_rng
from .scores import (
    ScoreDistribution,
    ScoreSimConfig,
    beta_a1_inverse_cdf,
    run_score_simulation,
    sample_scores,
)
from .svm import LinearModel, score, train_linear_svm

__all__ = [
    "CvBiasConfig",
    "LinearModel",
    "ScoreDistribution",
    "ScoreSimConfig",
    "SimReport",
    "SvmParams",
    "aggregate_cv_records",
    "beta_a1_inverse_cdf",
    "calibrate_separation",
    "calibrated_mean_auc",
    "make_gaussian_pair_dataset",
    "oracle_auc",
    "run_cv_bias_simulation",
    "run_rng",
    "run_score_simulation",
    "sample_scores",
    "score",
    "train_linear_svm",
]

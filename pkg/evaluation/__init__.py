from evaluation.classification import (
    accuracy,
    angular_fisher_score,
    feature_norm_stats,
    per_class_accuracy,
    summarize_seeds,
    topk_accuracy,
)
from evaluation.metrics import OODMetrics, ScoreSet, ood_metrics
from evaluation.scores import ClassStats, energy_score, fit_class_stats, mahalanobis_score, mls_score, msp_score

__all__ = [
    "ClassStats",
    "OODMetrics",
    "ScoreSet",
    "accuracy",
    "angular_fisher_score",
    "energy_score",
    "feature_norm_stats",
    "fit_class_stats",
    "mahalanobis_score",
    "mls_score",
    "msp_score",
    "ood_metrics",
    "per_class_accuracy",
    "summarize_seeds",
    "topk_accuracy",
]

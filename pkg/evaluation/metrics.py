from dataclasses import asdict, dataclass

import numpy as np
from scipy.stats import rankdata

from app.core.errors import InvalidArgumentError

TPR_TARGET_PERCENT = 95


@dataclass(frozen=True)
class ScoreSet:
    """In- and out-of-distribution scores; higher means more in-distribution."""

    in_scores: np.ndarray
    out_scores: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "in_scores", np.asarray(self.in_scores, dtype=np.float64).ravel())
        object.__setattr__(self, "out_scores", np.asarray(self.out_scores, dtype=np.float64).ravel())


@dataclass(frozen=True)
class OODMetrics:
    fpr95: float
    auroc: float
    aupr: float

    def as_dict(self) -> dict[str, float]:
        return asdict(self)

    def as_percent(self) -> dict[str, float]:
        return {k: 100.0 * v for k, v in asdict(self).items()}


def auroc(scores: ScoreSet) -> float:
    """P(in > out) + 0.5 P(in == out), from average ranks (Mann-Whitney U)."""
    n_in, n_out = scores.in_scores.size, scores.out_scores.size
    ranks = rankdata(np.concatenate([scores.in_scores, scores.out_scores]), method="average")
    u = ranks[:n_in].sum() - n_in * (n_in + 1) / 2.0
    return float(u / (n_in * n_out))


def fpr_at_95_tpr(scores: ScoreSet) -> float:
    """FPR at the highest threshold t (accept score >= t) whose TPR reaches 95%."""
    n_in = scores.in_scores.size
    needed = (TPR_TARGET_PERCENT * n_in + 99) // 100
    threshold = np.sort(scores.in_scores)[::-1][needed - 1]
    return float(np.mean(scores.out_scores >= threshold))


def aupr_in(scores: ScoreSet) -> float:
    """Average precision with in-distribution as positive class, step-wise over distinct thresholds."""
    values = np.concatenate([scores.in_scores, scores.out_scores])
    positive = np.concatenate([np.ones(scores.in_scores.size), np.zeros(scores.out_scores.size)])
    order = np.argsort(-values, kind="mergesort")
    values, positive = values[order], positive[order]
    # last index of every run of equal scores
    boundaries = np.r_[np.flatnonzero(np.diff(values)), values.size - 1]
    tp = np.cumsum(positive)[boundaries]
    fp = (boundaries + 1) - tp
    precision = tp / (tp + fp)
    recall = tp / scores.in_scores.size
    return float(np.sum(np.diff(np.r_[0.0, recall]) * precision))


def ood_metrics(scores: ScoreSet) -> OODMetrics:
    if scores.in_scores.size == 0 or scores.out_scores.size == 0:
        raise InvalidArgumentError("both in- and out-of-distribution score lists must be non-empty")
    return OODMetrics(fpr95=fpr_at_95_tpr(scores), auroc=auroc(scores), aupr=aupr_in(scores))

"""Confidence scores for out-of-distribution and open-set detection.

Convention everywhere: a higher score means "more in-distribution".
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve
from scipy.special import logsumexp, softmax

from app.core.errors import DegenerateInputError, InvalidArgumentError, NumericalError, ShapeError


def _logits(logits) -> np.ndarray:
    logits = np.asarray(logits, dtype=np.float64)
    if logits.ndim != 2:
        raise ShapeError(f"logits must be (N, C), got {logits.shape}")
    return logits


def msp_score(logits) -> np.ndarray:
    return softmax(_logits(logits), axis=1).max(axis=1)


def energy_score(logits, temperature: float = 1.0) -> np.ndarray:
    """Negative free energy T * log sum_c exp(logit_c / T)."""
    if not temperature > 0:
        raise InvalidArgumentError(f"temperature must be > 0, got {temperature}")
    return temperature * logsumexp(_logits(logits) / temperature, axis=1)


def mls_score(logits) -> np.ndarray:
    return _logits(logits).max(axis=1)


@dataclass(frozen=True)
class ClassStats:
    means: np.ndarray
    covariance: np.ndarray
    epsilon: float

    @property
    def num_classes(self) -> int:
        return self.means.shape[0]


def fit_class_stats(features, labels, num_classes: int, epsilon: float | None = None) -> ClassStats:
    """Class means and the shared covariance of class-mean-centred features.

    ``epsilon`` defaults to 1e-6 * trace(cov) / D.
    """
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels)
    if features.ndim != 2 or labels.shape != (features.shape[0],):
        raise ShapeError(f"features {features.shape} and labels {labels.shape} differ")
    counts = np.bincount(labels, minlength=num_classes)
    if counts.size != num_classes or np.any(counts == 0):
        raise DegenerateInputError("every class must be present to fit class statistics")
    means = np.stack([features[labels == c].mean(axis=0) for c in range(num_classes)])
    centred = features - means[labels]
    covariance = centred.T @ centred / features.shape[0]
    covariance = 0.5 * (covariance + covariance.T)
    if epsilon is None:
        epsilon = 1e-6 * float(np.trace(covariance)) / features.shape[1]
        if epsilon == 0:
            # constant features
            epsilon = 1e-6
    elif not epsilon > 0:
        raise InvalidArgumentError(f"epsilon must be > 0, got {epsilon}")
    return ClassStats(means=means, covariance=covariance, epsilon=float(epsilon))


def mahalanobis_score(stats: ClassStats, features) -> np.ndarray:
    """-min_c (f - mu_c)^T (cov + eps I)^-1 (f - mu_c), via a Cholesky solve."""
    features = np.asarray(features, dtype=np.float64)
    d = stats.means.shape[1]
    if features.ndim != 2 or features.shape[1] != d:
        raise ShapeError(f"features must be (N, {d}), got {features.shape}")
    regularized = stats.covariance + stats.epsilon * np.eye(d)
    try:
        factor = cho_factor(regularized, lower=True)
    except LinAlgError as e:
        raise NumericalError(f"regularized covariance is not positive definite: {e}") from e
    distances = np.empty((features.shape[0], stats.num_classes))
    for c, mean in enumerate(stats.means):
        diff = features - mean
        distances[:, c] = np.sum(diff * cho_solve(factor, diff.T).T, axis=1)
    return -distances.min(axis=1)

import numpy as np

from app.core.errors import DegenerateInputError, InvalidArgumentError, ShapeError, UndefinedScoreError


def _pair(predictions, labels) -> tuple[np.ndarray, np.ndarray]:
    predictions = np.asarray(predictions)
    labels = np.asarray(labels)
    if predictions.shape != labels.shape or predictions.ndim != 1:
        raise ShapeError(f"predictions {predictions.shape} and labels {labels.shape} differ")
    return predictions, labels


def accuracy(predictions, labels) -> float:
    predictions, labels = _pair(predictions, labels)
    if labels.size == 0:
        return float("nan")
    return float(np.mean(predictions == labels))


def per_class_accuracy(predictions, labels, num_classes: int) -> np.ndarray:
    """Fraction correct per class; NaN marks classes absent from ``labels``."""
    predictions, labels = _pair(predictions, labels)
    totals = np.bincount(labels, minlength=num_classes).astype(np.float64)
    correct = np.bincount(labels[predictions == labels], minlength=num_classes).astype(np.float64)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(totals > 0, correct / totals, np.nan)


def mean_defined(values: np.ndarray) -> float:
    return float(np.nanmean(values)) if np.any(~np.isnan(values)) else float("nan")


def topk_accuracy(logits: np.ndarray, labels, k: int) -> float:
    logits = np.asarray(logits)
    labels = np.asarray(labels)
    if logits.ndim != 2 or labels.shape != (logits.shape[0],):
        raise ShapeError(f"logits {logits.shape} and labels {labels.shape} differ")
    if not 1 <= k <= logits.shape[1]:
        raise InvalidArgumentError(f"k must lie in [1, {logits.shape[1]}], got {k}")
    # ties go to the lower class index, as with argmax
    top = np.argsort(-logits, axis=1, kind="stable")[:, :k]
    return float(np.mean(np.any(top == labels[:, None], axis=1)))


def _cosine_rows(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.sum(a * b, axis=1) / (np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1))


def angular_fisher_score(features: np.ndarray, labels, num_classes: int) -> float:
    """S_w / S_b with angular (1 - cosine) scatter; lower means more angularly discriminative.

    S_w = sum_i sum_{x in class i} (1 - cos(x, m_i)),  S_b = sum_i n_i (1 - cos(m_i, m)).
    """
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels)
    if features.ndim != 2 or labels.shape != (features.shape[0],):
        raise ShapeError(f"features {features.shape} and labels {labels.shape} differ")
    counts = np.bincount(labels, minlength=num_classes)
    if counts.size != num_classes or np.any(counts == 0):
        raise DegenerateInputError("every class must be present at least once")
    if np.any(np.linalg.norm(features, axis=1) == 0):
        raise DegenerateInputError("zero-norm feature vector")

    means = np.stack([features[labels == c].mean(axis=0) for c in range(num_classes)])
    global_mean = features.mean(axis=0)
    if np.any(np.linalg.norm(means, axis=1) == 0) or np.linalg.norm(global_mean) == 0:
        raise DegenerateInputError("zero-norm class or global mean")

    s_w = float(np.sum(1.0 - _cosine_rows(features, means[labels])))
    s_b = float(np.sum(counts * (1.0 - _cosine_rows(means, np.broadcast_to(global_mean, means.shape)))))
    # rounding leaves ~1e-16 residue when every mean points the same way
    if s_b <= 1e-12:
        raise UndefinedScoreError("between-class angular scatter is zero")
    return s_w / s_b


def feature_norm_stats(features: np.ndarray) -> dict[str, float]:
    norms = np.linalg.norm(np.asarray(features, dtype=np.float64), axis=1)
    return {"mean": float(norms.mean()), "std": float(norms.std())}


def summarize_seeds(values) -> tuple[float, float]:
    """Mean and population std over per-seed values, ignoring NaN entries."""
    arr = np.asarray([v for v in values if v is not None], dtype=np.float64)
    arr = arr[~np.isnan(arr)]
    if arr.size == 0:
        return float("nan"), float("nan")
    return float(arr.mean()), float(arr.std())

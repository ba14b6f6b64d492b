import numpy as np
from scipy.special import logsumexp, softmax

from app.core.errors import LabelError, ShapeError


def softmax_cross_entropy(logits: np.ndarray, labels: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean cross-entropy of softmax(logits) and its gradient (softmax - onehot) / N."""
    logits = np.asarray(logits, dtype=np.float64)
    labels = np.asarray(labels)
    if logits.ndim != 2 or labels.shape != (logits.shape[0],):
        raise ShapeError(f"logits {logits.shape} and labels {labels.shape} do not match")
    n, c = logits.shape
    if n and (labels.min() < 0 or labels.max() >= c):
        raise LabelError(f"labels must lie in [0, {c}), got range [{labels.min()}, {labels.max()}]")

    rows = np.arange(n)
    log_norm = logsumexp(logits, axis=1)
    loss = float(np.mean(log_norm - logits[rows, labels])) if n else 0.0

    grad = softmax(logits, axis=1)
    grad[rows, labels] -= 1.0
    grad /= max(n, 1)
    return loss, grad

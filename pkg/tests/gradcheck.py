import numpy as np


def central_difference(loss_fn, value: np.ndarray, step: float = 1e-5) -> np.ndarray:
    """Numerical gradient of ``loss_fn()`` with respect to ``value``, perturbed in place."""
    grad = np.zeros_like(value)
    it = np.nditer(value, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        original = value[idx]
        value[idx] = original + step
        plus = loss_fn()
        value[idx] = original - step
        minus = loss_fn()
        value[idx] = original
        grad[idx] = (plus - minus) / (2 * step)
    return grad

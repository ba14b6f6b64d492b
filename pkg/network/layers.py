from dataclasses import dataclass, field

import numpy as np

from app.core.errors import ShapeError


@dataclass(eq=False)
class Parameter:
    """A learnable array with its gradient and momentum buffers."""

    name: str
    value: np.ndarray
    decay: bool = True
    grad: np.ndarray = field(init=False, repr=False)
    velocity: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.value = np.asarray(self.value, dtype=np.float64)
        self.grad = np.zeros_like(self.value)
        self.velocity = np.zeros_like(self.value)

    def zero_grad(self) -> None:
        self.grad.fill(0.0)


def fan_in_uniform(rng: np.random.Generator, d_in: int, shape: tuple[int, ...]) -> np.ndarray:
    bound = 1.0 / np.sqrt(d_in)
    return rng.uniform(-bound, bound, size=shape)


class DenseLayer:
    def __init__(self, d_in: int, d_out: int, rng: np.random.Generator, name: str = "dense"):
        self.weight = Parameter(f"{name}.weight", fan_in_uniform(rng, d_in, (d_in, d_out)))
        self.bias = Parameter(f"{name}.bias", fan_in_uniform(rng, d_in, (d_out,)), decay=False)

    @property
    def d_in(self) -> int:
        return self.weight.value.shape[0]

    @property
    def d_out(self) -> int:
        return self.weight.value.shape[1]

    def parameters(self) -> list[Parameter]:
        return [self.weight, self.bias]

    def forward(self, x: np.ndarray) -> np.ndarray:
        if x.ndim != 2 or x.shape[1] != self.d_in:
            raise ShapeError(f"dense layer expects (N, {self.d_in}) input, got {x.shape}")
        return x @ self.weight.value + self.bias.value

    def backward(self, x: np.ndarray, grad_out: np.ndarray) -> np.ndarray:
        """Accumulates parameter gradients and returns the gradient w.r.t. ``x``."""
        self.weight.grad += x.T @ grad_out
        self.bias.grad += grad_out.sum(axis=0)
        return grad_out @ self.weight.value.T


def relu(z: np.ndarray) -> np.ndarray:
    return np.maximum(z, 0.0)


def relu_backward(z: np.ndarray, grad_out: np.ndarray) -> np.ndarray:
    return grad_out * (z > 0)

import logging
from abc import ABC, abstractmethod

import numpy as np

from app.core.errors import ShapeError
from network.layers import DenseLayer, Parameter, fan_in_uniform
from schemas.data_schemas import HeadKind
from separation.matrix import Radius, SeparationMatrix, build_separation_matrix, head_backward, head_forward

logger = logging.getLogger(__name__)


class LogitHead(ABC):
    """Final map from penultimate features to class logits."""

    kind: HeadKind
    # StandardLinear reads rectified features like any hidden layer; the others read them raw.
    rectified_input = False

    def __init__(self, feature_dim: int, num_classes: int):
        self.feature_dim = feature_dim
        self.num_classes = num_classes

    @abstractmethod
    def forward(self, features: np.ndarray) -> np.ndarray:
        pass

    @abstractmethod
    def backward(self, features: np.ndarray, grad_logits: np.ndarray) -> np.ndarray:
        """Accumulates head parameter gradients; returns the gradient w.r.t. ``features``."""

    def parameters(self) -> list[Parameter]:
        return []

    def _check(self, features: np.ndarray) -> None:
        if features.ndim != 2 or features.shape[1] != self.feature_dim:
            raise ShapeError(f"{self.kind.value} head expects (N, {self.feature_dim}) features, got {features.shape}")


class MaxSepFixedHead(LogitHead):
    kind = HeadKind.MAX_SEP_FIXED

    def __init__(self, matrix: SeparationMatrix, radius: Radius):
        super().__init__(matrix.embed_dim, matrix.num_classes)
        self.matrix = matrix
        self.radius = radius

    def forward(self, features):
        return head_forward(self.matrix, self.radius, features)

    def backward(self, features, grad_logits):
        return head_backward(self.matrix, self.radius, grad_logits)


class _MatrixHead(LogitHead):
    """Bias-free learnable k x C matrix scaled by rho."""

    def __init__(self, initial: np.ndarray, radius: Radius, name: str):
        super().__init__(initial.shape[0], initial.shape[1])
        self.radius = radius
        self.weight = Parameter(f"{name}.weight", np.array(initial, dtype=np.float64, copy=True))

    def parameters(self):
        return [self.weight]

    def forward(self, features):
        self._check(features)
        return self.radius.rho * (features @ self.weight.value)

    def backward(self, features, grad_logits):
        self.weight.grad += self.radius.rho * (features.T @ grad_logits)
        return self.radius.rho * (grad_logits @ self.weight.value.T)


class MaxSepLearnableHead(_MatrixHead):
    kind = HeadKind.MAX_SEP_LEARNABLE_INIT

    def __init__(self, matrix: SeparationMatrix, radius: Radius):
        super().__init__(matrix.entries, radius, name="head")


class RandomLearnableHead(_MatrixHead):
    kind = HeadKind.RANDOM_LEARNABLE

    def __init__(self, feature_dim: int, num_classes: int, rng: np.random.Generator):
        super().__init__(fan_in_uniform(rng, feature_dim, (feature_dim, num_classes)), Radius(1.0), name="head")


class StandardLinearHead(LogitHead):
    kind = HeadKind.STANDARD_LINEAR
    rectified_input = True

    def __init__(self, feature_dim: int, num_classes: int, rng: np.random.Generator):
        super().__init__(feature_dim, num_classes)
        self.dense = DenseLayer(feature_dim, num_classes, rng, name="head")

    def parameters(self):
        return self.dense.parameters()

    def forward(self, features):
        self._check(features)
        return self.dense.forward(features)

    def backward(self, features, grad_logits):
        return self.dense.backward(features, grad_logits)


def make_head(kind: HeadKind, feature_dim: int, num_classes: int, rho: float,
              rng: np.random.Generator) -> LogitHead:
    if kind is not HeadKind.STANDARD_LINEAR and feature_dim != num_classes - 1:
        raise ShapeError(f"{kind.value} head needs feature_dim = C-1 = {num_classes - 1}, got {feature_dim}")
    if kind is HeadKind.MAX_SEP_FIXED:
        return MaxSepFixedHead(build_separation_matrix(num_classes), Radius(rho))
    if kind is HeadKind.MAX_SEP_LEARNABLE_INIT:
        return MaxSepLearnableHead(build_separation_matrix(num_classes), Radius(rho))
    if kind is HeadKind.RANDOM_LEARNABLE:
        return RandomLearnableHead(feature_dim, num_classes, rng)
    return StandardLinearHead(feature_dim, num_classes, rng)

import logging
from abc import ABC, abstractmethod

import numpy as np

from app.core.errors import DegenerateInputError, InvalidArgumentError
from datagen.dataset import OOD_LABEL, Dataset

logger = logging.getLogger(__name__)


class OODSource(ABC):
    """Draws out-of-distribution samples relative to a reference (in-distribution) dataset."""

    kind = "base"

    def __init__(self, reference: Dataset):
        if len(reference) == 0:
            raise DegenerateInputError("reference dataset is empty")
        self.reference = reference
        self.logger = logging.getLogger(self.__class__.__name__)

    @abstractmethod
    def _draw(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Returns an (n, D) feature matrix."""

    def generate(self, n: int, seed: int) -> Dataset:
        if n < 1:
            raise InvalidArgumentError(f"n must be >= 1, got {n}")
        rng = np.random.default_rng(seed)
        features = self._draw(n, rng)
        self.logger.info(f"Generated {n} {self.kind} samples against '{self.reference.name}'")
        return Dataset(
            features,
            np.full(n, OOD_LABEL),
            self.reference.num_classes,
            name=f"{self.kind}-{self.reference.name}",
        )


class UniformNoiseSource(OODSource):
    kind = "uniform_noise"

    def _draw(self, n: int, rng: np.random.Generator) -> np.ndarray:
        low = self.reference.features.min(axis=0)
        high = self.reference.features.max(axis=0)
        return low + rng.random((n, self.reference.dim)) * (high - low)


class ShiftedBlobSource(OODSource):
    """Near-OOD: blobs around the reference class means, each displaced by ``offset``
    along its own random direction, with the reference's pooled within-class spread."""

    kind = "shifted_blobs"

    def __init__(self, reference: Dataset, offset: float):
        super().__init__(reference)
        if offset < 0:
            raise InvalidArgumentError(f"offset must be >= 0, got {offset}")
        if reference.is_ood:
            raise DegenerateInputError("shifted blobs need a labelled reference")
        self.offset = offset

    def _draw(self, n: int, rng: np.random.Generator) -> np.ndarray:
        ref = self.reference
        present = np.flatnonzero(ref.class_counts() > 0)
        means = np.stack([ref.features[ref.labels == c].mean(axis=0) for c in present])
        residual = ref.features - means[np.searchsorted(present, ref.labels)]
        noise_std = float(np.sqrt(np.mean(residual**2)))

        directions = rng.standard_normal(means.shape)
        directions /= np.linalg.norm(directions, axis=1, keepdims=True)
        shifted = means + self.offset * directions
        which = rng.integers(0, present.size, size=n)
        return shifted[which] + noise_std * rng.standard_normal((n, ref.dim))


def gen_ood(kind: str, reference: Dataset, n: int, seed: int, offset: float = 3.0) -> Dataset:
    if kind == UniformNoiseSource.kind:
        source: OODSource = UniformNoiseSource(reference)
    elif kind == ShiftedBlobSource.kind:
        source = ShiftedBlobSource(reference, offset)
    else:
        raise InvalidArgumentError(f"unknown OOD kind {kind!r}")
    return source.generate(n, seed)

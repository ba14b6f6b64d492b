import logging
from dataclasses import dataclass

import numpy as np

from app.core.errors import CapacityError, IntegrityError, InvalidArgumentError
from datagen.dataset import Dataset

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ImbalanceProfile:
    imbalance_factor: float
    per_class_counts: tuple[int, ...]

    def __post_init__(self):
        counts = np.asarray(self.per_class_counts)
        if counts.size == 0 or counts.min() < 1:
            raise IntegrityError(f"every class needs at least one sample, got {self.per_class_counts}")
        if np.any(np.diff(counts) > 0):
            raise IntegrityError(f"counts must be non-increasing, got {self.per_class_counts}")

    @property
    def num_classes(self) -> int:
        return len(self.per_class_counts)


def make_longtail_profile(num_classes: int, n_max: int, imbalance_factor: float) -> ImbalanceProfile:
    """Exponential profile: count_i = round(n_max * factor^(i / (C-1))), floored at 1."""
    if num_classes < 2:
        raise InvalidArgumentError(f"num_classes must be >= 2, got {num_classes}")
    if n_max < 1:
        raise InvalidArgumentError(f"n_max must be >= 1, got {n_max}")
    if not 0 < imbalance_factor <= 1:
        raise InvalidArgumentError(f"imbalance_factor must lie in (0, 1], got {imbalance_factor}")
    exponents = np.arange(num_classes) / (num_classes - 1)
    raw = n_max * np.power(imbalance_factor, exponents)
    counts = np.maximum(1, np.floor(raw + 0.5).astype(np.int64))
    return ImbalanceProfile(float(imbalance_factor), tuple(int(c) for c in counts))


def subsample_longtail(ds: Dataset, profile: ImbalanceProfile, seed: int) -> Dataset:
    """Keeps the first ``count_i`` samples of class i under a seeded shuffle. Apply to train splits only."""
    if profile.num_classes != ds.num_classes:
        raise InvalidArgumentError(f"profile has {profile.num_classes} classes, dataset has {ds.num_classes}")
    rng = np.random.default_rng(seed)
    kept = []
    for cls, count in enumerate(profile.per_class_counts):
        idx = np.flatnonzero(ds.labels == cls)
        if idx.size < count:
            raise CapacityError(
                f"class {cls} has {idx.size} samples, profile requests {count}", class_index=cls
            )
        kept.append(rng.permutation(idx)[:count])
    indices = np.concatenate(kept)
    logger.debug(f"Long-tail subsample of '{ds.name}': {len(ds)} -> {indices.size} samples")
    return ds.subset(indices, name=f"{ds.name}-lt{profile.imbalance_factor:g}")

import logging
import os
from dataclasses import dataclass

import numpy as np

from app.core import store
from app.core.errors import LabelError, ShapeError

logger = logging.getLogger(__name__)

# Labels of generated out-of-distribution sets; never used for training.
OOD_LABEL = -1


@dataclass(frozen=True)
class Dataset:
    """Feature matrix with integer labels. Arrays are copied and frozen on construction."""

    features: np.ndarray
    labels: np.ndarray
    num_classes: int
    name: str = ""

    def __post_init__(self):
        features = np.array(self.features, dtype=np.float64, copy=True)
        labels = np.array(self.labels, dtype=np.int64, copy=True)
        if features.ndim != 2:
            raise ShapeError(f"features must be 2-D, got shape {features.shape}")
        if labels.ndim != 1 or labels.shape[0] != features.shape[0]:
            raise ShapeError(f"labels shape {labels.shape} does not match {features.shape[0]} feature rows")
        if self.num_classes < 1:
            raise LabelError(f"num_classes must be >= 1, got {self.num_classes}")
        in_range = (labels >= 0) & (labels < self.num_classes)
        if labels.size and not in_range.all() and not (labels == OOD_LABEL).all():
            bad = int(labels[~in_range][0])
            raise LabelError(f"label {bad} outside [0, {self.num_classes})")
        features.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return self.labels.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    @property
    def is_ood(self) -> bool:
        return bool(len(self)) and bool((self.labels == OOD_LABEL).all())

    def class_counts(self) -> np.ndarray:
        if self.is_ood:
            return np.zeros(self.num_classes, dtype=np.int64)
        return np.bincount(self.labels, minlength=self.num_classes)

    def subset(self, indices: np.ndarray, name: str | None = None) -> "Dataset":
        indices = np.asarray(indices, dtype=np.int64)
        return Dataset(self.features[indices], self.labels[indices], self.num_classes,
                       self.name if name is None else name)

    def select_classes(self, classes: list[int], name: str | None = None) -> "Dataset":
        """Keeps only ``classes`` and relabels them 0..K-1 in the given order."""
        remap = np.full(self.num_classes, -1, dtype=np.int64)
        remap[np.asarray(classes, dtype=np.int64)] = np.arange(len(classes))
        mask = np.isin(self.labels, classes)
        return Dataset(self.features[mask], remap[self.labels[mask]], len(classes),
                       self.name if name is None else name)


def export_csv(ds: Dataset, path: str | os.PathLike) -> None:
    header = ",".join(["label"] + [f"f{j}" for j in range(ds.dim)])
    lines = [header]
    for label, row in zip(ds.labels, ds.features):
        lines.append(",".join([str(int(label))] + [format(v, ".17g") for v in row]))
    store.write_text(path, "\n".join(lines) + "\n")
    logger.info(f"Exported {len(ds)} rows of '{ds.name}' to {path}")

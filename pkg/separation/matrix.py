"""Closed-form maximally separated class vectors.

For C = k + 1 classes the matrix P_k (k x C) has unit-norm columns, pairwise dot
products of exactly -1/k and a zero column sum. It is built by the recursion

    P_1 = (1  -1)
    P_k = | 1   -1/k * 1^T               |
          | 0   sqrt(1 - 1/k^2) * P_{k-1} |

and used as a fixed logit head: logits = rho * P^T x.
"""

import csv
import logging
import math
import os
from dataclasses import dataclass, field

import numpy as np

from app.core import store
from app.core.config import settings
from app.core.errors import IntegrityError, InvalidArgumentError, ParseError, ShapeError

logger = logging.getLogger(__name__)

LOAD_TOLERANCE = 1e-6


@dataclass(frozen=True)
class SeparationMatrix:
    entries: np.ndarray = field(repr=False)

    def __post_init__(self):
        entries = np.array(self.entries, dtype=np.float64, copy=True)
        if entries.ndim != 2:
            raise ShapeError(f"separation matrix must be 2-D, got shape {entries.shape}")
        k, c = entries.shape
        if c < 2 or k != c - 1:
            raise ShapeError(f"separation matrix must have shape (C-1, C) with C >= 2, got {entries.shape}")
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    @property
    def num_classes(self) -> int:
        return self.entries.shape[1]

    @property
    def embed_dim(self) -> int:
        return self.entries.shape[0]

    def column(self, i: int) -> np.ndarray:
        return self.entries[:, i]

    def __repr__(self) -> str:
        return f"SeparationMatrix(num_classes={self.num_classes}, embed_dim={self.embed_dim})"


@dataclass(frozen=True)
class Radius:
    rho: float = 1.0

    def __post_init__(self):
        if not (self.rho > 0 and math.isfinite(self.rho)):
            raise InvalidArgumentError(f"radius must be a positive finite number, got {self.rho}")


@dataclass(frozen=True)
class VerificationReport:
    max_norm_deviation: float
    max_cosine_deviation: float
    mean_vector_norm: float
    tolerance: float
    pairs_checked: int
    exact: bool

    @property
    def passed(self) -> bool:
        return (
            self.max_norm_deviation <= self.tolerance
            and self.max_cosine_deviation <= self.tolerance
            and self.mean_vector_norm <= self.tolerance
        )

    def summary(self) -> str:
        mode = "exact" if self.exact else "sampled"
        status = "PASSED" if self.passed else "FAILED"
        return (
            f"{status} (tolerance {self.tolerance:g}, {mode}, {self.pairs_checked} pairs): "
            f"max |norm-1| = {self.max_norm_deviation:.3e}, "
            f"max |dot+1/k| = {self.max_cosine_deviation:.3e}, "
            f"|sum p_i| = {self.mean_vector_norm:.3e}"
        )


@dataclass(frozen=True)
class AngleStats:
    mean_deg: float
    std_deg: float
    min_deg: float
    max_deg: float


def as_radius(rho: "Radius | float") -> Radius:
    return rho if isinstance(rho, Radius) else Radius(float(rho))


def build_separation_matrix(num_classes: int) -> SeparationMatrix:
    """Fills P_{C-1} row by row; row r carries the scale accumulated by the levels above it."""
    if isinstance(num_classes, bool) or not isinstance(num_classes, (int, np.integer)):
        raise InvalidArgumentError(f"num_classes must be an integer, got {num_classes!r}")
    if num_classes < 2:
        raise InvalidArgumentError(f"num_classes must be >= 2, got {num_classes}")
    k = int(num_classes) - 1
    entries = np.zeros((k, k + 1), dtype=np.float64)
    scale = 1.0
    for r in range(k):
        level = k - r
        entries[r, r] = scale
        entries[r, r + 1:] = -scale / level
        scale *= math.sqrt(1.0 - 1.0 / (level * level))
    return SeparationMatrix(entries)


def grow_separation_matrix(previous: SeparationMatrix) -> SeparationMatrix:
    """One recursion step: P_{k-1} -> P_k, adding a class without touching the old geometry."""
    k = previous.embed_dim + 1
    entries = np.zeros((k, k + 1), dtype=np.float64)
    entries[0, 0] = 1.0
    entries[0, 1:] = -1.0 / k
    entries[1:, 1:] = math.sqrt(1.0 - 1.0 / (k * k)) * previous.entries
    return SeparationMatrix(entries)


def _gram_sample(entries: np.ndarray, pairs: int, seed: int) -> tuple[np.ndarray, int]:
    # Block sampling: rows x cols of distinct random classes gives ~pairs dot products via one matmul.
    c = entries.shape[1]
    side = min(c, max(2, math.isqrt(pairs)))
    rng = np.random.default_rng(seed)
    rows = rng.choice(c, size=side, replace=False)
    cols = rng.choice(c, size=side, replace=False)
    block = entries[:, rows].T @ entries[:, cols]
    off_diagonal = rows[:, None] != cols[None, :]
    return block[off_diagonal], int(off_diagonal.sum())


def verify_separation(
    matrix: SeparationMatrix,
    tolerance: float,
    *,
    max_exact_classes: int | None = None,
    sample_pairs: int | None = None,
    seed: int = 0,
) -> VerificationReport:
    if not tolerance > 0:
        raise InvalidArgumentError(f"tolerance must be > 0, got {tolerance}")
    max_exact_classes = settings.EXACT_VERIFY_MAX_CLASSES if max_exact_classes is None else max_exact_classes
    sample_pairs = settings.SAMPLE_PAIRS if sample_pairs is None else sample_pairs

    entries = matrix.entries
    k, c = entries.shape
    norm_dev = float(np.max(np.abs(np.linalg.norm(entries, axis=0) - 1.0)))
    sum_norm = float(np.linalg.norm(entries.sum(axis=1)))

    exact = c <= max_exact_classes
    if exact:
        gram = entries.T @ entries
        dots = gram[~np.eye(c, dtype=bool)]
        pairs = c * (c - 1)
    else:
        dots, pairs = _gram_sample(entries, sample_pairs, seed)
        logger.info(f"Sampled {pairs} class pairs for verification of C={c}")
    cos_dev = float(np.max(np.abs(dots + 1.0 / k)))

    return VerificationReport(
        max_norm_deviation=norm_dev,
        max_cosine_deviation=cos_dev,
        mean_vector_norm=sum_norm,
        tolerance=tolerance,
        pairs_checked=pairs,
        exact=exact,
    )


def pairwise_cosine_matrix(matrix: SeparationMatrix) -> np.ndarray:
    unit = matrix.entries / np.linalg.norm(matrix.entries, axis=0, keepdims=True)
    cosine = unit.T @ unit
    np.fill_diagonal(cosine, 1.0)
    return cosine


def pairwise_angle_stats(matrix: SeparationMatrix) -> AngleStats:
    cosine = pairwise_cosine_matrix(matrix)
    off = cosine[~np.eye(matrix.num_classes, dtype=bool)]
    angles = np.degrees(np.arccos(np.clip(off, -1.0, 1.0)))
    return AngleStats(
        mean_deg=float(angles.mean()),
        std_deg=float(angles.std()),
        min_deg=float(angles.min()),
        max_deg=float(angles.max()),
    )


def head_forward(matrix: SeparationMatrix, rho: "Radius | float", features: np.ndarray) -> np.ndarray:
    radius = as_radius(rho)
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[1] != matrix.embed_dim:
        raise ShapeError(f"features must have shape (N, {matrix.embed_dim}), got {features.shape}")
    return radius.rho * (features @ matrix.entries)


def head_backward(matrix: SeparationMatrix, rho: "Radius | float", grad_logits: np.ndarray) -> np.ndarray:
    radius = as_radius(rho)
    grad_logits = np.asarray(grad_logits, dtype=np.float64)
    if grad_logits.ndim != 2 or grad_logits.shape[1] != matrix.num_classes:
        raise ShapeError(f"grad_logits must have shape (N, {matrix.num_classes}), got {grad_logits.shape}")
    return radius.rho * (grad_logits @ matrix.entries.T)


def save_matrix(matrix: SeparationMatrix, path: str | os.PathLike) -> None:
    # %.17g round-trips binary64 exactly
    lines = [",".join(format(v, ".17g") for v in row) for row in matrix.entries]
    store.write_text(path, "\n".join(lines) + "\n")
    logger.info(f"Saved {matrix!r} to {path}")


def load_matrix(path: str | os.PathLike) -> SeparationMatrix:
    rows: list[list[float]] = []
    with open(path, encoding="utf-8", newline="") as f:
        try:
            records = list(csv.reader(f))
        except UnicodeDecodeError as e:
            raise ParseError(f"{path} is not valid UTF-8: {e.reason}", field="encoding") from None
    for row_idx, record in enumerate(records):
        if not record:
            continue
        if rows and len(record) != len(rows[0]):
            raise ParseError(
                f"ragged row: expected {len(rows[0])} values, found {len(record)}",
                row=row_idx,
                column=min(len(record), len(rows[0])),
            )
        values = []
        for col_idx, cell in enumerate(record):
            try:
                values.append(float(cell))
            except ValueError:
                raise ParseError(f"not a number: {cell!r}", row=row_idx, column=col_idx) from None
        rows.append(values)
    if not rows:
        raise ParseError("empty matrix file", row=0)

    try:
        matrix = SeparationMatrix(np.array(rows))
    except ShapeError as e:
        raise IntegrityError(str(e)) from e
    report = verify_separation(matrix, LOAD_TOLERANCE)
    if not report.passed:
        raise IntegrityError(f"{path} is not a maximally separated matrix: {report.summary()}")
    return matrix

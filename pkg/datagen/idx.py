"""IDX binary format (the MNIST container).

Layout, all integers big-endian unsigned 32-bit:

    images: magic 0x00000803 | N | rows | cols | N*rows*cols unsigned bytes, row-major
    labels: magic 0x00000801 | N | N unsigned bytes

Files ending in ``.gz`` are read and written through gzip.
"""

import gzip
import logging
import os
import struct

import numpy as np

from app.core import store
from app.core.errors import ParseError
from datagen.dataset import Dataset

logger = logging.getLogger(__name__)

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801


def _read_bytes(path: str | os.PathLike) -> bytes:
    opener = gzip.open if str(path).endswith(".gz") else open
    with opener(path, "rb") as f:
        return f.read()


def _header(data: bytes, count: int, path, kind: str) -> tuple[int, ...]:
    size = 4 * count
    if len(data) < size:
        raise ParseError(f"truncated {kind} header in {path}: {len(data)} bytes", field="header")
    return struct.unpack(f">{count}I", data[:size])


def read_idx_images(path: str | os.PathLike) -> np.ndarray:
    data = _read_bytes(path)
    magic, *_ = _header(data, 1, path, "image")
    if magic != IMAGE_MAGIC:
        raise ParseError(f"unexpected magic 0x{magic:08x} in image file {path}", field="magic")
    _, count, rows, cols = _header(data, 4, path, "image")
    expected = count * rows * cols
    payload = data[16:]
    if len(payload) < expected:
        raise ParseError(
            f"truncated image file {path}: {len(payload)} pixel bytes, expected {expected}", field="pixels"
        )
    return np.frombuffer(payload, dtype=np.uint8, count=expected).reshape(count, rows, cols)


def read_idx_labels(path: str | os.PathLike) -> np.ndarray:
    data = _read_bytes(path)
    magic, *_ = _header(data, 1, path, "label")
    if magic != LABEL_MAGIC:
        raise ParseError(f"unexpected magic 0x{magic:08x} in label file {path}", field="magic")
    _, count = _header(data, 2, path, "label")
    payload = data[8:]
    if len(payload) < count:
        raise ParseError(f"truncated label file {path}: {len(payload)} labels, expected {count}", field="labels")
    return np.frombuffer(payload, dtype=np.uint8, count=count)


def load_idx(images_path: str | os.PathLike, labels_path: str | os.PathLike,
             num_classes: int | None = None) -> Dataset:
    images = read_idx_images(images_path)
    labels = read_idx_labels(labels_path)
    if images.shape[0] != labels.shape[0]:
        raise ParseError(
            f"{images.shape[0]} images in {images_path} but {labels.shape[0]} labels in {labels_path}",
            field="count",
        )
    features = images.reshape(images.shape[0], -1).astype(np.float64) / 255.0
    if num_classes is None:
        num_classes = int(labels.max()) + 1 if labels.size else 1
    logger.info(f"Loaded {images.shape[0]} images of {images.shape[1]}x{images.shape[2]} from {images_path}")
    return Dataset(features, labels.astype(np.int64), num_classes, name=os.path.basename(str(images_path)))


def write_idx(images: np.ndarray, labels: np.ndarray,
              images_path: str | os.PathLike, labels_path: str | os.PathLike) -> None:
    images = np.asarray(images, dtype=np.uint8)
    labels = np.asarray(labels, dtype=np.uint8)
    if images.ndim != 3 or labels.ndim != 1 or images.shape[0] != labels.shape[0]:
        raise ParseError(f"cannot write images {images.shape} with labels {labels.shape}", field="count")
    image_blob = struct.pack(">4I", IMAGE_MAGIC, *images.shape) + images.tobytes(order="C")
    label_blob = struct.pack(">2I", LABEL_MAGIC, labels.shape[0]) + labels.tobytes()
    for path, blob in ((images_path, image_blob), (labels_path, label_blob)):
        store.write_bytes(path, gzip.compress(blob, mtime=0) if str(path).endswith(".gz") else blob)

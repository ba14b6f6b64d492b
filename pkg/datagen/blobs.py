import numpy as np

from datagen.dataset import Dataset
from schemas.data_schemas import BlobSpec

TRAIN_STREAM = 0
TEST_STREAM = 1
SHIFTED_STREAM = 2


def blob_means(spec: BlobSpec) -> np.ndarray:
    rng = np.random.default_rng(spec.seed)
    return rng.standard_normal((spec.num_classes, spec.dim)) * spec.mean_scale


def gen_blobs(spec: BlobSpec, stream: int = TRAIN_STREAM) -> Dataset:
    """Isotropic Gaussian blobs.

    Class means depend on ``spec.seed`` only; the noise is drawn from the
    ``(seed, stream)`` generator so train and test splits share their means.
    """
    means = blob_means(spec)
    labels = np.repeat(np.arange(spec.num_classes), spec.samples_per_class)
    noise_rng = np.random.default_rng([spec.seed, stream])
    noise = noise_rng.standard_normal((labels.shape[0], spec.dim)) * spec.noise_std
    return Dataset(means[labels] + noise, labels, spec.num_classes, name=f"blobs-s{spec.seed}-{stream}")

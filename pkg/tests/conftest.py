import json

import numpy as np
import pytest

from datagen.dataset import Dataset


@pytest.fixture
def separable_pair() -> Dataset:
    """Two tight clusters at (-3, -3) and (3, 3)."""
    rng = np.random.default_rng(7)
    centers = np.array([[-3.0, -3.0], [3.0, 3.0]])
    labels = np.repeat([0, 1], 40)
    features = centers[labels] + 0.3 * rng.standard_normal((80, 2))
    return Dataset(features, labels, 2, name="pair")


@pytest.fixture
def tiny_config(tmp_path):
    """Writes a small blob experiment config and returns (path, payload)."""
    payload = {
        "dataset": {
            "kind": "blobs",
            "num_classes": 4,
            "dim": 6,
            "train_per_class": 30,
            "test_per_class": 15,
            "mean_scale": 3.0,
            "noise_std": 1.0,
            "seed": 3,
        },
        "imbalance_factors": [1.0, 0.5],
        "heads": ["MaxSepFixed", "StandardLinear"],
        "network": {"hidden_dims": [16]},
        "optimizer": {"initial_lr": 0.05},
        "epochs": 3,
        "batch_size": 16,
        "seeds": [0, 1],
        "output_dir": str(tmp_path / "results"),
    }
    path = tmp_path / "config.json"
    path.write_text(json.dumps(payload), encoding="utf-8")
    return path, payload

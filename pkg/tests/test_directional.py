"""Desk-scale directional experiments: 10 Gaussian blobs in 64-d, one hidden layer, five seeds.

Each comparison passes when it holds on the seed mean or fails on at most one seed of five.
"""

import json

import numpy as np
import pytest

from app.cli import run
from app.report import load_results
from schemas.data_schemas import HeadKind

pytestmark = pytest.mark.slow

SEEDS = [0, 1, 2, 3, 4]
ALLOWED_VIOLATIONS = 1

BASE_CONFIG = {
    "dataset": {
        "kind": "blobs",
        "num_classes": 10,
        "dim": 64,
        "train_per_class": 500,
        "test_per_class": 100,
        "seed": 0,
    },
    "heads": ["MaxSepFixed", "StandardLinear"],
    "network": {"hidden_dims": [64]},
    "epochs": 100,
    "batch_size": 128,
    "seeds": SEEDS,
}


def _holds(margins: list[float]) -> bool:
    """``margins`` are per-seed amounts by which the expected direction holds."""
    violations = sum(m < 0 for m in margins)
    return float(np.mean(margins)) >= 0 or violations <= ALLOWED_VIOLATIONS


def _by_seed(results, protocol: str, factor: float, head: HeadKind, value) -> dict[int, float]:
    return {r.seed: value(r) for r in results
            if r.protocol == protocol and r.imbalance_factor == factor and r.head is head}


def _margins(results, protocol: str, factor: float, value, lower_is_better: bool = False) -> list[float]:
    sep = _by_seed(results, protocol, factor, HeadKind.MAX_SEP_FIXED, value)
    base = _by_seed(results, protocol, factor, HeadKind.STANDARD_LINEAR, value)
    assert sorted(sep) == sorted(base) == SEEDS
    sign = -1.0 if lower_is_better else 1.0
    return [sign * (sep[s] - base[s]) for s in SEEDS]


def _energy_auroc(r) -> float:
    return r.metrics["uniform_noise"]["energy"].auroc


def _mls_auroc(r) -> float:
    return r.metrics["open_set"]["mls"].auroc


@pytest.fixture(scope="module")
def results_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("directional")
    out = str(root / "results")

    def run_with(command: str, **extra):
        path = root / f"{command}.json"
        path.write_text(json.dumps({**BASE_CONFIG, "output_dir": out, **extra}), encoding="utf-8")
        assert run([command, "--config", str(path)]) == 0

    run_with("train", imbalance_factors=[1.0, 0.1, 0.01])
    run_with("eval-ood", imbalance_factors=[1.0], ood={"sets": [{"kind": "uniform_noise", "n": 1000}]})
    run_with("eval-osr", imbalance_factors=[1.0], open_set={"known_classes": [0, 1, 2, 3, 4, 5]})
    return out


@pytest.fixture(scope="module")
def results(results_dir):
    return load_results(results_dir)


class TestClassificationDirection:
    def test_separation_not_worse_under_heavy_imbalance(self, results):
        assert _holds(_margins(results, "train", 0.01, lambda r: r.accuracy))

    def test_gap_grows_with_imbalance(self, results):
        balanced = _margins(results, "train", 1.0, lambda r: r.accuracy)
        skewed = _margins(results, "train", 0.01, lambda r: r.accuracy)
        assert _holds([s - b for s, b in zip(skewed, balanced)])

    def test_angular_fisher_score_lower_with_separation(self, results):
        margins = _margins(results, "train", 0.1, lambda r: r.angular_fisher_score, lower_is_better=True)
        assert _holds(margins)


class TestOpenWorldDirection:
    def test_energy_auroc_on_uniform_noise(self, results):
        assert _holds(_margins(results, "ood", 1.0, _energy_auroc))
        for head in (HeadKind.MAX_SEP_FIXED, HeadKind.STANDARD_LINEAR):
            assert np.mean(list(_by_seed(results, "ood", 1.0, head, _energy_auroc).values())) > 0.9

    def test_open_set_mls_auroc(self, results):
        assert _holds(_margins(results, "osr", 1.0, _mls_auroc))

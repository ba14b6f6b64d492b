import numpy as np
import pytest

from app.core.errors import InvalidArgumentError
from evaluation.metrics import OODMetrics, ScoreSet, aupr_in, auroc, fpr_at_95_tpr, ood_metrics


def _pairwise_auroc(s: ScoreSet) -> float:
    total = 0.0
    for a in s.in_scores:
        for b in s.out_scores:
            total += 1.0 if a > b else 0.5 if a == b else 0.0
    return total / (s.in_scores.size * s.out_scores.size)


def _sweep_fpr95(s: ScoreSet) -> float:
    for t in sorted(set(s.in_scores.tolist()), reverse=True):
        if np.mean(s.in_scores >= t) >= 0.95:
            return float(np.mean(s.out_scores >= t))
    raise AssertionError("unreachable: the lowest in-score accepts everything")


def _sweep_aupr(s: ScoreSet) -> float:
    total, prev_recall = 0.0, 0.0
    for t in sorted(set(np.concatenate([s.in_scores, s.out_scores]).tolist()), reverse=True):
        tp = np.sum(s.in_scores >= t)
        fp = np.sum(s.out_scores >= t)
        recall = tp / s.in_scores.size
        total += (recall - prev_recall) * tp / (tp + fp)
        prev_recall = recall
    return total


def _random_sets(count: int = 100):
    rng = np.random.default_rng(2024)
    for i in range(count):
        n_in, n_out = rng.integers(1, 40, size=2)
        if i % 3 == 0:
            # integer scores force ties
            yield ScoreSet(rng.integers(0, 6, n_in).astype(float), rng.integers(0, 6, n_out).astype(float))
        else:
            yield ScoreSet(rng.normal(0.5, 1.0, n_in), rng.normal(0.0, 1.0, n_out))


class TestExamples:
    def test_perfect_separation(self):
        m = ood_metrics(ScoreSet([3.0, 4.0, 5.0], [0.0, 1.0]))
        assert (m.auroc, m.fpr95) == (1.0, 0.0)
        assert m.aupr == pytest.approx(1.0, abs=1e-15)

    def test_identical_distributions(self):
        scores = [0.1, 0.4, 0.4, 0.9]
        assert auroc(ScoreSet(scores, scores)) == 0.5

    def test_constant_scores(self):
        m = ood_metrics(ScoreSet([1.0] * 5, [1.0] * 5))
        assert (m.auroc, m.fpr95, m.aupr) == (0.5, 1.0, 0.5)

    def test_empty_inputs(self):
        with pytest.raises(InvalidArgumentError):
            ood_metrics(ScoreSet([], [1.0]))
        with pytest.raises(InvalidArgumentError):
            ood_metrics(ScoreSet([1.0], []))

    def test_as_percent(self):
        assert OODMetrics(0.5, 0.25, 1.0).as_percent() == {"fpr95": 50.0, "auroc": 25.0, "aupr": 100.0}


class TestOracles:
    def test_brute_force_agreement(self):
        for s in _random_sets():
            assert auroc(s) == pytest.approx(_pairwise_auroc(s), abs=1e-12)
            assert fpr_at_95_tpr(s) == pytest.approx(_sweep_fpr95(s), abs=1e-12)
            assert aupr_in(s) == pytest.approx(_sweep_aupr(s), abs=1e-12)

    def test_sklearn_agreement(self):
        sk_metrics = pytest.importorskip("sklearn.metrics")
        for s in _random_sets(30):
            y = np.r_[np.ones(s.in_scores.size), np.zeros(s.out_scores.size)]
            scores = np.r_[s.in_scores, s.out_scores]
            assert auroc(s) == pytest.approx(sk_metrics.roc_auc_score(y, scores), abs=1e-12)
            assert aupr_in(s) == pytest.approx(sk_metrics.average_precision_score(y, scores), abs=1e-12)


class TestProperties:
    def test_antisymmetry(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            s = ScoreSet(rng.normal(size=15), rng.normal(size=11))
            assert auroc(ScoreSet(s.out_scores, s.in_scores)) == pytest.approx(1.0 - auroc(s), abs=1e-12)

    def test_monotone_invariance(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            s = ScoreSet(rng.integers(-5, 6, 25).astype(float), rng.integers(-5, 6, 17).astype(float))
            t = ScoreSet(np.exp(s.in_scores), np.exp(s.out_scores))
            assert auroc(t) == auroc(s)
            assert fpr_at_95_tpr(t) == fpr_at_95_tpr(s)
            u = ScoreSet(4.0 * s.in_scores, 4.0 * s.out_scores)
            assert auroc(u) == auroc(s)
            assert fpr_at_95_tpr(u) == fpr_at_95_tpr(s)

    def test_ranges(self):
        for s in _random_sets(30):
            m = ood_metrics(s)
            assert 0.0 <= m.fpr95 <= 1.0
            assert 0.0 <= m.auroc <= 1.0
            assert 0.0 < m.aupr <= 1.0

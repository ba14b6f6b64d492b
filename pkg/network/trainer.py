import logging
from dataclasses import asdict, dataclass, field
from typing import NamedTuple

import numpy as np

from app.core.errors import InvalidArgumentError
from datagen.dataset import Dataset
from network.losses import softmax_cross_entropy
from network.model import Network, backward, forward
from network.optim import lr_at, sgd_step
from schemas.data_schemas import OptimizerConfig

logger = logging.getLogger(__name__)

EVAL_BATCH = 1024


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    lr: float
    loss: float
    train_acc: float
    test_acc: float | None


@dataclass
class TrainingLog:
    records: list[EpochRecord] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    def to_dicts(self) -> list[dict]:
        return [asdict(r) for r in self.records]


class EvalOutput(NamedTuple):
    features: np.ndarray
    logits: np.ndarray
    predictions: np.ndarray
    # feature-layer output before any rectification; the same x̂ definition for every head
    embeddings: np.ndarray


def evaluate(net: Network, batch: np.ndarray, batch_size: int = EVAL_BATCH) -> EvalOutput:
    feats, embeds, logits = [], [], []
    for start in range(0, batch.shape[0], batch_size):
        out = forward(net, batch[start:start + batch_size])
        feats.append(out.features)
        embeds.append(out.cache.pre_activations[-1])
        logits.append(out.logits)
    if not feats:
        no_features = np.zeros((0, net.feature_dim))
        return EvalOutput(no_features, np.zeros((0, net.num_classes)), np.zeros(0, dtype=np.int64), no_features)
    logits_all = np.concatenate(logits)
    return EvalOutput(np.concatenate(feats), logits_all, np.argmax(logits_all, axis=1), np.concatenate(embeds))


def dataset_accuracy(net: Network, ds: Dataset) -> float:
    return float(np.mean(evaluate(net, ds.features).predictions == ds.labels))


def train(net: Network, dataset: Dataset, opt: OptimizerConfig, epochs: int, batch_size: int, seed: int,
          test_set: Dataset | None = None) -> TrainingLog:
    """Minibatch SGD. Each epoch reshuffles with a generator seeded by (seed, epoch); the last
    partial batch is kept."""
    if len(dataset) == 0:
        raise InvalidArgumentError("cannot train on an empty dataset")
    if batch_size < 1:
        raise InvalidArgumentError(f"batch_size must be >= 1, got {batch_size}")
    log = TrainingLog()
    n = len(dataset)
    for epoch in range(epochs):
        lr = lr_at(opt.schedule, epoch, epochs, opt.initial_lr)
        order = np.random.default_rng([seed, epoch]).permutation(n)
        total_loss = 0.0
        for start in range(0, n, batch_size):
            idx = order[start:start + batch_size]
            result = forward(net, dataset.features[idx])
            loss, grad_logits = softmax_cross_entropy(result.logits, dataset.labels[idx])
            backward(net, result.cache, grad_logits)
            sgd_step(net, opt, lr)
            total_loss += loss * idx.size
        record = EpochRecord(
            epoch=epoch,
            lr=lr,
            loss=total_loss / n,
            train_acc=dataset_accuracy(net, dataset),
            test_acc=dataset_accuracy(net, test_set) if test_set is not None else None,
        )
        log.records.append(record)
        logger.debug(f"epoch {epoch}: lr={lr:.4g} loss={record.loss:.4f} train_acc={record.train_acc:.4f}")
    if log.records:
        last = log.records[-1]
        logger.info(f"Trained {epochs} epochs on '{dataset.name}': loss={last.loss:.4f} train_acc={last.train_acc:.4f}")
    return log

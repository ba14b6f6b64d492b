import csv
import io
import logging
import os
import time

import numpy as np

from app.core import store
from app.core.errors import ConfigError, DegenerateInputError, ResultsError, UndefinedScoreError
from datagen.blobs import TEST_STREAM, TRAIN_STREAM, gen_blobs
from datagen.dataset import OOD_LABEL, Dataset
from datagen.idx import load_idx
from datagen.longtail import make_longtail_profile, subsample_longtail
from datagen.ood import gen_ood
from evaluation.classification import (
    accuracy,
    angular_fisher_score,
    feature_norm_stats,
    per_class_accuracy,
)
from evaluation.metrics import ScoreSet, ood_metrics
from evaluation.scores import energy_score, fit_class_stats, mahalanobis_score, mls_score, msp_score
from network.checkpoint import load_checkpoint, save_checkpoint
from network.model import Network, build_network
from network.trainer import evaluate, train
from schemas.data_schemas import BlobDatasetSpec, ExperimentConfig, MetricTriple, RunJob, RunResult

logger = logging.getLogger(__name__)

RESULT_FILE = "result.json"
LOG_FILE = "log.jsonl"
CHECKPOINT_FILE = "checkpoint.bin"
SCORES_FILE = "scores.csv"


def load_splits(config: ExperimentConfig) -> tuple[Dataset, Dataset]:
    spec = config.dataset
    if isinstance(spec, BlobDatasetSpec):
        return (
            gen_blobs(spec.blob_spec(spec.train_per_class), stream=TRAIN_STREAM),
            gen_blobs(spec.blob_spec(spec.test_per_class), stream=TEST_STREAM),
        )
    missing = config.missing_paths()
    if missing:
        raise ConfigError(f"dataset files not found: {', '.join(missing)}")
    train_ds = load_idx(spec.train_images, spec.train_labels, spec.num_classes)
    test_ds = load_idx(spec.test_images, spec.test_labels, spec.num_classes or train_ds.num_classes)
    if test_ds.num_classes != train_ds.num_classes:
        test_ds = Dataset(test_ds.features, test_ds.labels, train_ds.num_classes, test_ds.name)
    return train_ds, test_ds


def _triple(scores: ScoreSet) -> MetricTriple:
    m = ood_metrics(scores)
    return MetricTriple(fpr95=m.fpr95, auroc=m.auroc, aupr=m.aupr)


def _separated_toy_scores(n_in: int, n_out: int) -> ScoreSet:
    return ScoreSet(np.linspace(1.0, 2.0, n_in), np.linspace(-2.0, -1.0, n_out))


class ExperimentWorker:
    def __init__(self, job: RunJob):
        self.job = job
        self.config = job.config
        self.run_dir = job.run_dir
        self.logger = logging.getLogger(self.__class__.__name__)

    def _derived_seed(self, offset: int) -> int:
        return self.job.seed * 1009 + offset

    def _fit(self, train_ds: Dataset, test_ds: Dataset, run_dir: str) -> tuple[Network, Dataset, list[str]]:
        """Long-tail subsample, train, persist log + checkpoint. Returns the net and the training set used."""
        cfg = self.config
        notes = []
        n_max = int(train_ds.class_counts().min())
        profile = make_longtail_profile(train_ds.num_classes, n_max, self.job.imbalance_factor)
        lt_train = subsample_longtail(train_ds, profile, seed=self.job.seed)
        net = build_network(train_ds.dim, train_ds.num_classes, self.job.head, cfg.network, cfg.rho, self.job.seed)
        log = train(net, lt_train, cfg.optimizer, cfg.epochs, cfg.batch_size, self.job.seed, test_set=test_ds)
        store.write_jsonl(os.path.join(run_dir, LOG_FILE), log.to_dicts())
        save_checkpoint(net, os.path.join(run_dir, CHECKPOINT_FILE))
        notes.append("test split kept balanced; long-tail profile applied to the training split only")
        return net, lt_train, notes

    def _classification_fields(self, net: Network, test_ds: Dataset) -> dict:
        out = evaluate(net, test_ds.features)
        per_class = per_class_accuracy(out.predictions, test_ds.labels, test_ds.num_classes)
        afs = None
        nonzero = np.linalg.norm(out.embeddings, axis=1) > 0
        try:
            afs = angular_fisher_score(out.embeddings[nonzero], test_ds.labels[nonzero], test_ds.num_classes)
        except (DegenerateInputError, UndefinedScoreError) as e:
            self.logger.warning(f"Angular Fisher Score undefined for {self.run_dir}: {e}")
        return {
            "accuracy": accuracy(out.predictions, test_ds.labels),
            "per_class_accuracy": [None if np.isnan(v) else float(v) for v in per_class],
            "angular_fisher_score": afs,
            "num_classes": test_ds.num_classes,
        }

    def _result(self, started: float, **fields) -> RunResult:
        fields.setdefault("log_path", os.path.join(self.run_dir, LOG_FILE))
        result = RunResult(
            protocol=self.job.protocol,
            config_hash=self.job.config_hash,
            experiment_hash=self.config.experiment_hash(self.job.protocol),
            seed=self.job.seed,
            head=self.job.head,
            imbalance_factor=self.job.imbalance_factor,
            wall_clock_seconds=time.perf_counter() - started,
            **fields,
        )
        store.write_text(os.path.join(self.run_dir, RESULT_FILE), result.model_dump_json(indent=2) + "\n")
        return result

    def run_train(self) -> RunResult:
        started = time.perf_counter()
        train_ds, test_ds = load_splits(self.config)
        net, lt_train, notes = self._fit(train_ds, test_ds, self.run_dir)
        return self._result(
            started,
            train_counts=lt_train.class_counts().tolist(),
            checkpoint_path=os.path.join(self.run_dir, CHECKPOINT_FILE),
            notes=notes,
            **self._classification_fields(net, test_ds),
        )

    def _trained_model(self, train_ds: Dataset, test_ds: Dataset) -> tuple[Network, Dataset, list[str], str]:
        train_hash = self.config.run_hash("train", self.job.imbalance_factor)
        train_dir = os.path.join(self.config.output_dir, train_hash, str(self.job.seed), self.job.head.value)
        checkpoint = os.path.join(train_dir, CHECKPOINT_FILE)
        n_max = int(train_ds.class_counts().min())
        profile = make_longtail_profile(train_ds.num_classes, n_max, self.job.imbalance_factor)
        if os.path.exists(checkpoint):
            self.logger.info(f"Reusing trained model {checkpoint}")
            net = load_checkpoint(checkpoint)
            notes = [f"model reused from {train_dir}"]
            lt_train = subsample_longtail(train_ds, profile, self.job.seed)
            return net, lt_train, notes, os.path.join(train_dir, LOG_FILE)
        if self.config.ood is not None and not self.config.ood.train_if_missing:
            raise ResultsError(f"missing model {checkpoint}; run `train` first or set ood.train_if_missing")
        self.logger.info(f"No model at {checkpoint}; training one for {self.run_dir}")
        net, lt_train, notes = self._fit(train_ds, test_ds, self.run_dir)
        return net, lt_train, notes, os.path.join(self.run_dir, LOG_FILE)

    def run_ood(self) -> RunResult:
        started = time.perf_counter()
        ood_cfg = self.config.ood
        if ood_cfg is None:
            raise ConfigError("config has no 'ood' block")
        train_ds, test_ds = load_splits(self.config)
        net, lt_train, notes, log_path = self._trained_model(train_ds, test_ds)

        train_out = evaluate(net, lt_train.features)
        stats = fit_class_stats(train_out.features, lt_train.labels, lt_train.num_classes,
                                ood_cfg.mahalanobis_epsilon)
        in_out = evaluate(net, test_ds.features)
        in_scores = {
            "msp": msp_score(in_out.logits),
            "energy": energy_score(in_out.logits, ood_cfg.temperature),
            "mahalanobis": mahalanobis_score(stats, in_out.features),
        }

        rows = [("in", name, s, int(lbl))
                for name, vals in in_scores.items() for s, lbl in zip(vals, test_ds.labels)]
        metrics = {}
        for i, set_spec in enumerate(ood_cfg.sets):
            ood_ds = gen_ood(set_spec.kind, train_ds, set_spec.n, self._derived_seed(i + 1), set_spec.offset)
            if len(ood_ds) == 0:
                raise ResultsError(f"OOD set {set_spec.kind} is empty")
            ood_out = evaluate(net, ood_ds.features)
            out_scores = {
                "msp": msp_score(ood_out.logits),
                "energy": energy_score(ood_out.logits, ood_cfg.temperature),
                "mahalanobis": mahalanobis_score(stats, ood_out.features),
            }
            table = {}
            for name in in_scores:
                score_set = ScoreSet(in_scores[name], out_scores[name])
                if self.job.inject_separated_scores:
                    score_set = _separated_toy_scores(len(test_ds), len(ood_ds))
                table[name] = _triple(score_set)
                rows.extend((set_spec.kind, name, s, OOD_LABEL) for s in out_scores[name])
            metrics[set_spec.kind] = table
        if self.job.inject_separated_scores:
            notes.append("scores replaced by a perfectly separated toy ScoreSet (debug)")

        self._write_scores(rows)
        return self._result(
            started,
            train_counts=lt_train.class_counts().tolist(),
            log_path=log_path,
            metrics=metrics,
            notes=notes,
            **self._classification_fields(net, test_ds),
        )

    def run_osr(self) -> RunResult:
        started = time.perf_counter()
        osr_cfg = self.config.open_set
        if osr_cfg is None:
            raise ConfigError("config has no 'open_set' block")
        train_ds, test_ds = load_splits(self.config)
        known = osr_cfg.known_classes
        if max(known) >= train_ds.num_classes or len(known) >= train_ds.num_classes:
            raise ConfigError(
                f"open_set.known_classes must be a proper subset of 0..{train_ds.num_classes - 1}, got {known}"
            )
        if len(known) < 2:
            raise ConfigError("open_set.known_classes needs at least two classes")
        known_train = train_ds.select_classes(known, name=f"{train_ds.name}-known")
        known_test = test_ds.select_classes(known, name=f"{test_ds.name}-known")
        unknown_mask = ~np.isin(test_ds.labels, known)
        open_test = test_ds.subset(np.flatnonzero(unknown_mask), name=f"{test_ds.name}-open")

        net, lt_train, notes = self._fit(known_train, known_test, self.run_dir)
        notes.append("open-set split is a seeded desk-scale analogue, not a benchmark split reproduction")
        known_out = evaluate(net, known_test.features)
        open_out = evaluate(net, open_test.features)

        metrics = {"open_set": {
            "msp": _triple(ScoreSet(msp_score(known_out.logits), msp_score(open_out.logits))),
            "mls": _triple(ScoreSet(mls_score(known_out.logits), mls_score(open_out.logits))),
        }}
        rows = [("known", "mls", s, int(lbl)) for s, lbl in zip(mls_score(known_out.logits), known_test.labels)]
        rows += [("open", "mls", s, int(lbl)) for s, lbl in zip(mls_score(open_out.logits), open_test.labels)]
        self._write_scores(rows)

        known_norms = feature_norm_stats(known_out.features)
        open_norms = feature_norm_stats(open_out.features)
        return self._result(
            started,
            train_counts=lt_train.class_counts().tolist(),
            checkpoint_path=os.path.join(self.run_dir, CHECKPOINT_FILE),
            metrics=metrics,
            feature_norms={
                "known_mean": known_norms["mean"], "known_std": known_norms["std"],
                "open_mean": open_norms["mean"], "open_std": open_norms["std"],
            },
            notes=notes,
            **self._classification_fields(net, known_test),
        )

    def _write_scores(self, rows: list[tuple]) -> None:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["split", "score_name", "score", "label"])
        for split, name, score, label in rows:
            writer.writerow([split, name, format(float(score), ".17g"), label])
        store.write_text(os.path.join(self.run_dir, SCORES_FILE), buf.getvalue())


def execute_job(job: RunJob) -> RunResult:
    """Runs one (protocol, seed, head, imbalance factor) combination and stores its result."""
    logger.info(f"Running {job.protocol} job: seed={job.seed} head={job.head.value} factor={job.imbalance_factor:g}")
    worker = ExperimentWorker(job)
    try:
        if job.protocol == "train":
            return worker.run_train()
        if job.protocol == "ood":
            return worker.run_ood()
        return worker.run_osr()
    except Exception as e:
        logger.error(f"Job failed ({job.protocol}, seed={job.seed}, head={job.head.value}): {e}", exc_info=True)
        raise

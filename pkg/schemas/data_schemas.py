import hashlib
import json
import os
from enum import Enum
from typing import Annotated, Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class HeadKind(str, Enum):
    MAX_SEP_FIXED = "MaxSepFixed"
    MAX_SEP_LEARNABLE_INIT = "MaxSepLearnableInit"
    RANDOM_LEARNABLE = "RandomLearnable"
    STANDARD_LINEAR = "StandardLinear"

    @property
    def uses_separation(self) -> bool:
        return self in (HeadKind.MAX_SEP_FIXED, HeadKind.MAX_SEP_LEARNABLE_INIT)


class BlobSpec(_Strict):
    num_classes: int = Field(ge=2)
    dim: int = Field(ge=2)
    samples_per_class: int = Field(ge=1)
    mean_scale: float = Field(gt=0)
    noise_std: float = Field(ge=0)
    seed: int = 0


class CosineSchedule(_Strict):
    kind: Literal["cosine"] = "cosine"
    total_epochs: int | None = Field(default=None, ge=0)


class StepSchedule(_Strict):
    kind: Literal["step"] = "step"
    milestones: list[int] = Field(default_factory=list)
    gamma: float = Field(default=0.1, gt=0)

    @field_validator("milestones")
    @classmethod
    def _sorted_milestones(cls, v: list[int]) -> list[int]:
        if any(m < 0 for m in v):
            raise ValueError("milestones must be non-negative")
        return sorted(v)


Schedule = Annotated[CosineSchedule | StepSchedule, Field(discriminator="kind")]


class OptimizerConfig(_Strict):
    initial_lr: float = Field(default=0.1, gt=0)
    momentum: float = Field(default=0.9, ge=0, lt=1)
    weight_decay: float = Field(default=5e-4, ge=0)
    schedule: Schedule = Field(default_factory=CosineSchedule)


class NetworkSpec(_Strict):
    hidden_dims: list[int] = Field(default_factory=lambda: [64])
    feature_dim: int | None = Field(default=None, ge=1)

    @field_validator("hidden_dims")
    @classmethod
    def _positive_dims(cls, v: list[int]) -> list[int]:
        if any(d < 1 for d in v):
            raise ValueError("hidden dims must be >= 1")
        return v


class BlobDatasetSpec(_Strict):
    kind: Literal["blobs"] = "blobs"
    num_classes: int = Field(default=10, ge=2)
    dim: int = Field(default=64, ge=2)
    train_per_class: int = Field(default=500, ge=1)
    test_per_class: int = Field(default=100, ge=1)
    mean_scale: float = Field(default=1.0, gt=0)
    noise_std: float = Field(default=1.0, ge=0)
    seed: int = 0

    def blob_spec(self, samples_per_class: int) -> BlobSpec:
        return BlobSpec(
            num_classes=self.num_classes,
            dim=self.dim,
            samples_per_class=samples_per_class,
            mean_scale=self.mean_scale,
            noise_std=self.noise_std,
            seed=self.seed,
        )


class IdxDatasetSpec(_Strict):
    kind: Literal["idx"] = "idx"
    train_images: str
    train_labels: str
    test_images: str
    test_labels: str
    num_classes: int | None = Field(default=None, ge=2)

    def paths(self) -> list[str]:
        return [self.train_images, self.train_labels, self.test_images, self.test_labels]


DatasetSpec = Annotated[BlobDatasetSpec | IdxDatasetSpec, Field(discriminator="kind")]


class OODSetSpec(_Strict):
    kind: Literal["uniform_noise", "shifted_blobs"]
    n: int = Field(default=1000, ge=1)
    offset: float = Field(default=3.0, ge=0)


class OODSpec(_Strict):
    sets: list[OODSetSpec] = Field(
        default_factory=lambda: [OODSetSpec(kind="uniform_noise"), OODSetSpec(kind="shifted_blobs")]
    )
    temperature: float = Field(default=1.0, gt=0)
    mahalanobis_epsilon: float | None = Field(default=None, gt=0)
    train_if_missing: bool = True

    @field_validator("sets")
    @classmethod
    def _non_empty(cls, v: list[OODSetSpec]) -> list[OODSetSpec]:
        if not v:
            raise ValueError("at least one OOD set is required")
        return v


class OpenSetSpec(_Strict):
    known_classes: list[int]

    @field_validator("known_classes")
    @classmethod
    def _distinct(cls, v: list[int]) -> list[int]:
        if not v:
            raise ValueError("known_classes must not be empty")
        if len(set(v)) != len(v) or any(c < 0 for c in v):
            raise ValueError("known_classes must be distinct non-negative class indices")
        return sorted(v)


def _digest(payload: dict) -> str:
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


class ExperimentConfig(_Strict):
    dataset: DatasetSpec = Field(default_factory=BlobDatasetSpec)
    imbalance_factors: list[float] = Field(default_factory=lambda: [1.0])
    heads: list[HeadKind] = Field(default_factory=lambda: [HeadKind.MAX_SEP_FIXED, HeadKind.STANDARD_LINEAR])
    network: NetworkSpec = Field(default_factory=NetworkSpec)
    optimizer: OptimizerConfig = Field(default_factory=OptimizerConfig)
    epochs: int = Field(default=100, ge=0)
    batch_size: int = Field(default=128, ge=1)
    rho: float = Field(default=1.0, gt=0)
    seeds: list[int] = Field(default_factory=lambda: [0, 1, 2, 3, 4])
    output_dir: str = "results"
    ood: OODSpec | None = None
    open_set: OpenSetSpec | None = None

    @field_validator("imbalance_factors")
    @classmethod
    def _factors_in_range(cls, v: list[float]) -> list[float]:
        if not v:
            raise ValueError("imbalance_factors must not be empty")
        if any(not 0 < f <= 1 for f in v):
            raise ValueError("imbalance factors must lie in (0, 1]")
        return v

    @field_validator("heads")
    @classmethod
    def _heads_non_empty(cls, v: list[HeadKind]) -> list[HeadKind]:
        if not v:
            raise ValueError("heads must not be empty")
        if len(set(v)) != len(v):
            raise ValueError("heads must be distinct")
        return v

    @field_validator("seeds")
    @classmethod
    def _seeds_non_empty(cls, v: list[int]) -> list[int]:
        if not v:
            raise ValueError("seeds must not be empty")
        return v

    @model_validator(mode="after")
    def _feature_dim_matches_heads(self) -> "ExperimentConfig":
        fd = self.network.feature_dim
        c = self.dataset.num_classes
        if fd is not None and c is not None and fd != c - 1:
            if any(h is not HeadKind.STANDARD_LINEAR for h in self.heads):
                raise ValueError(f"network.feature_dim must be num_classes - 1 = {c - 1} for separation heads")
        return self

    def missing_paths(self) -> list[str]:
        if isinstance(self.dataset, IdxDatasetSpec):
            return [p for p in self.dataset.paths() if not os.path.exists(p)]
        return []

    def _hash_payload(self, protocol: str) -> dict:
        payload = self.model_dump(mode="json", exclude={"seeds", "heads", "output_dir", "imbalance_factors"})
        payload["protocol"] = protocol
        if protocol != "ood":
            payload.pop("ood", None)
        elif payload.get("ood") is not None:
            # decides whether a model gets trained, never what it computes
            payload["ood"].pop("train_if_missing", None)
        if protocol != "osr":
            payload.pop("open_set", None)
        return payload

    def run_hash(self, protocol: str, imbalance_factor: float) -> str:
        """Stable hash of everything that shapes one run's numbers.

        Seeds and heads are run coordinates (they get their own directories) and
        ``output_dir`` is placement only, so none of them enter the hash.
        """
        return _digest({**self._hash_payload(protocol), "imbalance_factor": imbalance_factor})

    def experiment_hash(self, protocol: str) -> str:
        """Like ``run_hash`` but shared by every imbalance factor of one experiment."""
        return _digest(self._hash_payload(protocol))


class RunJob(_Strict):
    protocol: Literal["train", "ood", "osr"]
    config: ExperimentConfig
    config_hash: str
    seed: int
    head: HeadKind
    imbalance_factor: float
    inject_separated_scores: bool = False

    @property
    def run_dir(self) -> str:
        return os.path.join(self.config.output_dir, self.config_hash, str(self.seed), self.head.value)


class MetricTriple(BaseModel):
    fpr95: float
    auroc: float
    aupr: float


class RunResult(BaseModel):
    protocol: Literal["train", "ood", "osr"]
    config_hash: str
    # same for every imbalance factor of one experiment; groups runs in reports
    experiment_hash: str
    seed: int
    head: HeadKind
    imbalance_factor: float
    num_classes: int
    accuracy: float
    per_class_accuracy: list[float | None]
    train_counts: list[int]
    angular_fisher_score: float | None = None
    log_path: str
    checkpoint_path: str | None = None
    # {ood set name: {score name: triple}} for "ood"; {"open_set": {score: triple}} for "osr"
    metrics: dict[str, dict[str, MetricTriple]] | None = None
    feature_norms: dict[str, float] | None = None
    notes: list[str] = Field(default_factory=list)
    wall_clock_seconds: float

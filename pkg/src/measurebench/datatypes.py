"""Core domain types shared across the benchmark.

Datasets are dense float tensors of shape (n, l, d): n instances, l time
steps, d feature channels. Labels, when present, are integer class ids.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence, Union

import numpy as np


class DatasetRole(str, Enum):
    TRAIN = "train"
    SUBSTITUTE = "substitute"
    HELD_OUT = "held_out"
    SYNTHETIC = "synthetic"


class ScoreKind(str, Enum):
    REAL = "real"
    BOOLEAN = "boolean"
    PAIR = "pair"


class OrientationKind(str, Enum):
    HIGHER_BETTER = "higher_better"
    LOWER_BETTER = "lower_better"
    TARGET_VALUE = "target_value"


class Expectation(str, Enum):
    IMPROVE = "improve"
    WORSEN = "worsen"
    CONSTANT = "constant"
    NOT_APPLICABLE = "not_applicable"


class Category(str, Enum):
    FIDELITY = "fidelity"
    GENERALIZATION = "generalization"
    PRIVACY = "privacy"
    REPRESENTATIVENESS = "representativeness"


class TestStatus(str, Enum):
    TODO = "todo"
    ONGOING = "ongoing"
    SUCCESSFUL = "successful"
    FAILED = "failed"
    SKIPPED = "skipped"


CATEGORIES = tuple(Category)


class DatasetError(ValueError):
    """Raised when a dataset violates its structural invariants."""


@dataclass
class TimeSeriesDataset:
    """A set of equally long, real-valued time series.

    values has shape (n, l, d) and must be finite after preprocessing.
    labels, when present, holds one integer class id per instance.
    """

    values: np.ndarray
    labels: Optional[np.ndarray] = None
    name: str = "unnamed"
    role: DatasetRole = DatasetRole.TRAIN

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim == 2:
            self.values = self.values[:, :, None]
        if self.values.ndim != 3:
            raise DatasetError(f"values must be (n, l, d), got shape {self.values.shape}")
        if self.labels is not None:
            self.labels = np.asarray(self.labels)
            if self.labels.shape != (self.n,):
                raise DatasetError(
                    f"labels must have {self.n} entries, got {self.labels.shape}"
                )

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def length(self) -> int:
        return self.values.shape[1]

    @property
    def channels(self) -> int:
        return self.values.shape[2]

    @property
    def has_labels(self) -> bool:
        return self.labels is not None

    def validate(self) -> None:
        """Check the structural invariants; raise DatasetError on violation."""
        if self.n < 2 or self.length < 2 or self.channels < 1:
            raise DatasetError(
                f"dataset {self.name!r} too small: shape {self.values.shape}"
            )
        if not np.isfinite(self.values).all():
            raise DatasetError(f"dataset {self.name!r} contains NaN/Inf values")
        if self.labels is not None and len(np.unique(self.labels)) < 1:
            raise DatasetError(f"dataset {self.name!r} has labels but no classes")

    def replace(self, *, values=None, labels="keep", name=None, role=None) -> "TimeSeriesDataset":
        """Shallow copy with selected fields swapped out."""
        return TimeSeriesDataset(
            values=self.values if values is None else values,
            labels=self.labels if isinstance(labels, str) and labels == "keep" else labels,
            name=self.name if name is None else name,
            role=self.role if role is None else role,
        )

    def content_hash(self) -> str:
        """Stable hash of values + labels, used as a cache key component."""
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.values).tobytes())
        h.update(str(self.values.shape).encode())
        if self.labels is not None:
            h.update(np.ascontiguousarray(self.labels).tobytes())
        return h.hexdigest()[:24]

    def class_histogram(self) -> dict:
        if self.labels is None:
            return {}
        uniq, counts = np.unique(self.labels, return_counts=True)
        return {int(u): int(c) for u, c in zip(uniq, counts)}


@dataclass
class EmbeddedDataset:
    """Fixed-length vector representation of a dataset: one row per instance."""

    vectors: np.ndarray
    source: str
    embedder: str

    def __post_init__(self):
        self.vectors = np.asarray(self.vectors, dtype=np.float64)
        if self.vectors.ndim != 2 or self.vectors.shape[1] < 1:
            raise DatasetError(f"embedding must be (n, delta), got {self.vectors.shape}")

    @property
    def n(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]


@dataclass(frozen=True)
class Orientation:
    """Optimization direction of a measure's score.

    target_value scores are canonicalized to -(distance to the target), so a
    detection AUC of 0.5 or a copying z of 0 is the best achievable value.
    """

    kind: OrientationKind
    target: Optional[float] = None

    @staticmethod
    def higher() -> "Orientation":
        return Orientation(OrientationKind.HIGHER_BETTER)

    @staticmethod
    def lower() -> "Orientation":
        return Orientation(OrientationKind.LOWER_BETTER)

    @staticmethod
    def target_value(v: float) -> "Orientation":
        return Orientation(OrientationKind.TARGET_VALUE, float(v))

    def canonical(self, score: float) -> float:
        """Map a raw real score to the higher-is-better scale."""
        if self.kind == OrientationKind.HIGHER_BETTER:
            return float(score)
        if self.kind == OrientationKind.LOWER_BETTER:
            return -float(score)
        return -abs(float(score) - self.target)

    def canonical_bool(self, score: bool) -> bool:
        """Booleans: canonical True means 'good'."""
        if self.kind == OrientationKind.LOWER_BETTER:
            return not bool(score)
        return bool(score)


@dataclass(frozen=True)
class MeasureDescriptor:
    """Registry entry describing a measure's inputs and score semantics.

    label_aware marks measures whose score can react to label changes at
    all; label-only transformations are skipped for the others.
    """

    id: str
    score_kind: ScoreKind
    orientation: Orientation
    needs_embedding: bool = False
    needs_scaling: bool = False
    needs_labels: bool = False
    needs_held_out: bool = False
    needs_ordered_pairing: bool = False
    label_aware: bool = False
    variant_of: Optional[str] = None

    def to_dict(self) -> dict:
        d = {
            "id": self.id,
            "score_kind": self.score_kind.value,
            "orientation": self.orientation.kind.value,
            "needs_embedding": self.needs_embedding,
            "needs_scaling": self.needs_scaling,
            "needs_labels": self.needs_labels,
            "needs_held_out": self.needs_held_out,
            "needs_ordered_pairing": self.needs_ordered_pairing,
            "label_aware": self.label_aware,
        }
        if self.orientation.target is not None:
            d["orientation_target"] = self.orientation.target
        if self.variant_of:
            d["variant_of"] = self.variant_of
        return d


@dataclass(frozen=True)
class TransformDescriptor:
    """Registry entry for a transformation's applicability constraints."""

    id: str
    needs_labels: bool = False
    needs_multivariate: bool = False
    needs_substitute: bool = False
    min_length: int = 2
    label_targeted: bool = False  # perturbs labels only; values untouched

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "needs_labels": self.needs_labels,
            "needs_multivariate": self.needs_multivariate,
            "needs_substitute": self.needs_substitute,
            "min_length": self.min_length,
            "label_targeted": self.label_targeted,
        }


ScoreValue = Union[float, bool, tuple]


@dataclass(frozen=True)
class TestSpec:
    """One benchmark test: dataset x transformation chain x measure x seed."""

    __test__ = False  # not a pytest class, despite the name

    dataset: str
    transformation_chain: tuple
    measure: str
    embedder: Optional[str]
    seed: int
    kappa_grid: tuple = tuple(round(0.1 * i, 1) for i in range(11))

    def __post_init__(self):
        object.__setattr__(self, "transformation_chain", tuple(self.transformation_chain))
        object.__setattr__(self, "kappa_grid", tuple(float(k) for k in self.kappa_grid))
        grid = self.kappa_grid
        if not grid or grid[0] != 0.0:
            raise ValueError("kappa grid must start at 0.0")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("kappa grid must be strictly increasing")
        if not 1 <= len(self.transformation_chain) <= 2:
            raise ValueError("transformation chain must have 1 or 2 elements")

    def test_id(self) -> str:
        key = "|".join(
            [
                self.dataset,
                "+".join(self.transformation_chain),
                self.measure,
                self.embedder or "-",
                str(self.seed),
                ",".join(f"{k:g}" for k in self.kappa_grid),
            ]
        )
        return hashlib.sha256(key.encode()).hexdigest()[:16]

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "transformation_chain": list(self.transformation_chain),
            "measure": self.measure,
            "embedder": self.embedder,
            "seed": int(self.seed),
            "kappa_grid": list(self.kappa_grid),
        }

    @staticmethod
    def from_dict(d: dict) -> "TestSpec":
        return TestSpec(
            dataset=d["dataset"],
            transformation_chain=tuple(d["transformation_chain"]),
            measure=d["measure"],
            embedder=d.get("embedder"),
            seed=int(d["seed"]),
            kappa_grid=tuple(d["kappa_grid"]),
        )


_ALLOWED_TRANSITIONS = {
    TestStatus.TODO: {TestStatus.ONGOING, TestStatus.SKIPPED},
    TestStatus.ONGOING: {TestStatus.SUCCESSFUL, TestStatus.FAILED, TestStatus.TODO},
    TestStatus.SUCCESSFUL: set(),
    TestStatus.FAILED: {TestStatus.TODO},
    TestStatus.SKIPPED: set(),
}


@dataclass
class ScoreTrajectory:
    """Scores and per-step runtimes along the modulation path."""

    scores: list = field(default_factory=list)
    runtimes: list = field(default_factory=list)
    embed_runtimes: list = field(default_factory=list)
    cache_aided: list = field(default_factory=list)
    extras: list = field(default_factory=list)
    status: TestStatus = TestStatus.TODO
    failure_reason: Optional[str] = None

    def transition(self, new_status: TestStatus) -> None:
        if new_status not in _ALLOWED_TRANSITIONS[self.status]:
            raise ValueError(f"illegal status transition {self.status} -> {new_status}")
        self.status = new_status

    def append_step(self, score: ScoreValue, runtime: float, *, embed_runtime: float = 0.0,
                    aided: bool = False, extra: Optional[dict] = None) -> None:
        self.scores.append(score)
        self.runtimes.append(float(runtime))
        self.embed_runtimes.append(float(embed_runtime))
        self.cache_aided.append(bool(aided))
        self.extras.append(extra or {})


@dataclass(frozen=True)
class ReliabilityRecord:
    measure: str
    category: Category
    test_id: str
    dataset: str
    seed: int
    r_rel: float

    def __post_init__(self):
        if not 0.0 <= self.r_rel <= 1.0:
            raise ValueError(f"r_rel out of [0,1]: {self.r_rel}")


@dataclass(frozen=True)
class ConsistencyRecord:
    measure: str
    category: Category
    axis: str  # "dataset" | "seed"
    r_con: float

    def __post_init__(self):
        if self.axis not in ("dataset", "seed"):
            raise ValueError(f"unknown consistency axis {self.axis!r}")
        if not 0.0 <= self.r_con <= 1.0:
            raise ValueError(f"r_con out of [0,1]: {self.r_con}")


def derive_rng(seed: int, *tags: Sequence) -> np.random.Generator:
    """Deterministic per-purpose RNG: mixes the test seed with string/int tags.

    Keeps independent random streams for e.g. the shuffle step, each chain
    position, and each measure, so results never depend on call order.
    """
    material = [int(seed) & 0xFFFFFFFFFFFFFFFF]
    for tag in tags:
        if isinstance(tag, str):
            digest = hashlib.sha256(tag.encode()).digest()[:8]
            material.append(int.from_bytes(digest, "little"))
        else:
            material.append(int(tag) & 0xFFFFFFFFFFFFFFFF)
    return np.random.default_rng(np.random.SeedSequence(material))

"""Dataset ingestion, preprocessing, splitting, and the Sine generator.

Local files use a long-format CSV schema: ``instance_id, t, ch_0..ch_{d-1}
[, label]``. Generated datasets come from :func:`generate_sine`.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
import pandas as pd

from .datatypes import DatasetError, DatasetRole, TimeSeriesDataset, derive_rng

OUTLIER_QUANTILES = (0.001, 0.999)


@dataclass
class SineClass:
    """Parameters of one Sine class: two stacked waves per channel."""

    amplitude: float
    period: float
    x_shift: float          # fraction of the period
    channel_offset: float   # phase offset added per channel, radians
    proportion: float


# Five imbalanced classes; values are a documented fixture.
DEFAULT_SINE_CLASSES = (
    SineClass(0.5, 10.0, 0.0, 0.0, 0.35),
    SineClass(0.8, 16.0, 0.2, math.pi / 8, 0.25),
    SineClass(1.0, 25.0, 0.4, math.pi / 4, 0.20),
    SineClass(1.2, 33.0, 0.6, math.pi / 2, 0.12),
    SineClass(1.5, 50.0, 0.8, math.pi, 0.08),
)

JITTER_FRACTION = 0.05  # +-5% uniform jitter on amplitude and shift


@dataclass
class DatasetSpec:
    """How to obtain and shape one dataset."""

    name: str
    source: str = "sine"                 # "sine" | path to a CSV file
    window_length: Optional[int] = None  # sliding-window extraction
    stride: int = 1
    has_labels: bool = False
    sine_params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.window_length is not None and self.window_length < 2:
            raise ValueError("window_length must be >= 2")
        if self.stride < 1:
            raise ValueError("stride must be >= 1")


@dataclass
class DatasetStats:
    mean: float
    std: float
    channel_min: np.ndarray
    channel_max: np.ndarray
    class_histogram: dict

    def to_dict(self) -> dict:
        return {
            "mean": self.mean,
            "std": self.std,
            "channel_min": [float(v) for v in self.channel_min],
            "channel_max": [float(v) for v in self.channel_max],
            "class_histogram": {str(k): v for k, v in self.class_histogram.items()},
        }


def compute_stats(ds: TimeSeriesDataset) -> DatasetStats:
    return DatasetStats(
        mean=float(ds.values.mean()),
        std=float(ds.values.std()),
        channel_min=ds.values.min(axis=(0, 1)),
        channel_max=ds.values.max(axis=(0, 1)),
        class_histogram=ds.class_histogram(),
    )


@dataclass
class SplitPolicy:
    """Two-way (train + substitute) or three-way (+ held-out) split."""

    parts: str = "two_way"

    def __post_init__(self):
        if self.parts not in ("two_way", "three_way"):
            raise ValueError(f"unknown split policy {self.parts!r}")

    @property
    def n_parts(self) -> int:
        return 2 if self.parts == "two_way" else 3

    @staticmethod
    def for_requirements(needs_held_out: bool) -> "SplitPolicy":
        return SplitPolicy("three_way" if needs_held_out else "two_way")


# ---------------------------------------------------------------------------
# Loading and preprocessing

def load_csv(path, spec: DatasetSpec) -> Tuple[list, Optional[list]]:
    """Read the long-format CSV into per-instance (l_i, d) arrays."""
    try:
        frame = pd.read_csv(path)
    except Exception as exc:
        raise DatasetError(f"cannot parse {path}: {exc}") from exc
    channel_cols = sorted(
        (c for c in frame.columns if c.startswith("ch_")),
        key=lambda c: int(c.split("_", 1)[1]),
    )
    if not channel_cols or "instance_id" not in frame.columns or "t" not in frame.columns:
        raise DatasetError(f"{path} lacks the instance_id/t/ch_* columns")
    segments, labels = [], []
    for _, group in frame.groupby("instance_id", sort=True):
        group = group.sort_values("t")
        segments.append(group[channel_cols].to_numpy(dtype=np.float64))
        if spec.has_labels:
            if "label" not in frame.columns:
                raise DatasetError(f"{path} declared labeled but has no label column")
            labels.append(group["label"].iloc[0])
    return segments, (labels if spec.has_labels else None)


def _interpolate_missing(segment: np.ndarray) -> np.ndarray:
    """Linear interpolation per channel; edge gaps take the nearest value."""
    out = segment.copy()
    idx = np.arange(len(out))
    for c in range(out.shape[1]):
        col = out[:, c]
        bad = ~np.isfinite(col)
        if bad.all():
            raise DatasetError(f"channel {c} has no observed values")
        if bad.any():
            col[bad] = np.interp(idx[bad], idx[~bad], col[~bad])
    return out


def _clip_outliers(values: np.ndarray) -> np.ndarray:
    """Clip each channel to its global [q0.001, q0.999] band.

    Order-statistic quantiles (no interpolation) keep the clip idempotent.
    """
    lo = np.quantile(values, OUTLIER_QUANTILES[0], axis=(0, 1), method="lower")
    hi = np.quantile(values, OUTLIER_QUANTILES[1], axis=(0, 1), method="higher")
    return np.clip(values, lo[None, None, :], hi[None, None, :])


def _window_segment(segment: np.ndarray, window: int, stride: int) -> list:
    if len(segment) < window:
        return []
    starts = range(0, len(segment) - window + 1, stride)
    return [segment[s : s + window] for s in starts]


def preprocess(segments: list, spec: DatasetSpec, labels: Optional[list] = None,
               role: DatasetRole = DatasetRole.TRAIN) -> Tuple[TimeSeriesDataset, DatasetStats]:
    """Assemble raw per-instance tables into a clean, equal-length dataset.

    Steps: interpolate missing values, optional sliding-window extraction,
    length equalization by tail truncation, outlier clipping, statistics.
    """
    if not segments:
        raise DatasetError(f"dataset {spec.name!r} is empty")
    cleaned = [_interpolate_missing(np.atleast_2d(np.asarray(s, dtype=np.float64)))
               for s in segments]
    out_labels: Optional[list] = list(labels) if labels is not None else None

    if spec.window_length is not None:
        windows, window_labels = [], []
        for i, seg in enumerate(cleaned):
            chunks = _window_segment(seg, spec.window_length, spec.stride)
            windows.extend(chunks)
            if out_labels is not None:
                window_labels.extend([out_labels[i]] * len(chunks))
        cleaned = windows
        out_labels = window_labels if out_labels is not None else None
    if len(cleaned) < 4:
        raise DatasetError(
            f"dataset {spec.name!r} has {len(cleaned)} instances after windowing; "
            "need at least 4 to split"
        )

    min_len = min(len(seg) for seg in cleaned)
    values = np.stack([seg[:min_len] for seg in cleaned])
    values = _clip_outliers(values)

    label_arr = None
    if out_labels is not None:
        codes, _ = pd.factorize(pd.Series(out_labels), sort=True)
        label_arr = codes.astype(np.int64)
    ds = TimeSeriesDataset(values=values, labels=label_arr, name=spec.name, role=role)
    ds.validate()
    return ds, compute_stats(ds)


def preprocess_values(ds: TimeSeriesDataset) -> TimeSeriesDataset:
    """The idempotent value-level pipeline applied to an assembled dataset."""
    values = ds.values
    if not np.isfinite(values).all():
        flat = values.reshape(-1, values.shape[2])
        values = np.stack(
            [_interpolate_missing(flat[i * ds.length : (i + 1) * ds.length])
             for i in range(ds.n)]
        )
    return ds.replace(values=_clip_outliers(values))


def load_dataset(spec: DatasetSpec, seed: int = 0) -> Tuple[TimeSeriesDataset, DatasetStats]:
    if spec.source == "sine":
        ds = generate_sine(seed=seed, **spec.sine_params)
        ds.name = spec.name
        return ds, compute_stats(ds)
    segments, labels = load_csv(spec.source, spec)
    return preprocess(segments, spec, labels)


# ---------------------------------------------------------------------------
# Sine generator

def generate_sine(classes: Tuple[SineClass, ...] = DEFAULT_SINE_CLASSES,
                  n: int = 10000, l: int = 100, d: int = 2,
                  seed: int = 0) -> TimeSeriesDataset:
    """Labeled dataset of two-wave sine mixtures with imbalanced classes.

    Each instance sums a base wave and a half-period harmonic at half
    amplitude; channels share the waveform up to the class phase offset.
    Amplitude and shift carry per-instance +-5% jitter. Deterministic for a
    given seed.
    """
    if not classes:
        raise DatasetError("class table must not be empty")
    props = np.array([c.proportion for c in classes])
    if abs(props.sum() - 1.0) > 1e-9:
        raise DatasetError("class proportions must sum to 1")
    if n < len(classes):
        raise DatasetError(f"n={n} smaller than the number of classes")

    # largest-remainder apportionment keeps counts within +-1 of n*p
    raw = props * n
    counts = np.floor(raw).astype(int)
    for idx in np.argsort(raw - counts)[::-1][: n - counts.sum()]:
        counts[idx] += 1

    rng = derive_rng(seed, "sine")
    t = np.arange(l, dtype=np.float64)
    blocks, labels = [], []
    for cls_idx, (cls, count) in enumerate(zip(classes, counts)):
        jitter = rng.uniform(-JITTER_FRACTION, JITTER_FRACTION, size=(count, 2))
        amp = cls.amplitude * (1.0 + jitter[:, 0])
        # additive shift jitter, as a fraction of the period
        shift = (cls.x_shift + jitter[:, 1]) * cls.period
        phase = 2.0 * np.pi * (t[None, :] - shift[:, None]) / cls.period
        offsets = cls.channel_offset * np.arange(d)
        arg = phase[:, :, None] + offsets[None, None, :]
        wave = amp[:, None, None] * (np.sin(arg) + 0.5 * np.sin(2.0 * arg))
        blocks.append(wave)
        labels.extend([cls_idx] * count)

    values = np.concatenate(blocks, axis=0)
    labels = np.asarray(labels, dtype=np.int64)
    order = rng.permutation(n)
    return TimeSeriesDataset(values=values[order], labels=labels[order], name="sine")


def sine_amplitude_bound(classes: Tuple[SineClass, ...] = DEFAULT_SINE_CLASSES) -> float:
    """Upper bound on |value|: 1.5x amplitude for the two waves, plus jitter."""
    return max(c.amplitude for c in classes) * 1.5 * (1.0 + JITTER_FRACTION)


# ---------------------------------------------------------------------------
# Splitting

def split(ds: TimeSeriesDataset, policy: SplitPolicy, seed: int):
    """Partition into (train, substitute[, held_out]), label-stratified.

    Parts are equally sized within one instance, disjoint by index, and
    deterministic for a given seed.
    """
    parts = policy.n_parts
    if ds.n < 2 * parts:
        raise DatasetError(f"cannot split {ds.n} instances into {parts} parts")
    targets = _part_sizes(ds.n, parts)
    rng = derive_rng(seed, "split")

    if ds.has_labels:
        class_sizes = ds.class_histogram()
        if min(class_sizes.values()) < parts:
            warnings.warn(
                f"dataset {ds.name!r}: a class has fewer instances than parts; "
                "falling back to a non-stratified split"
            )
            part_indices = _plain_split(ds.n, targets, rng)
        else:
            part_indices = _stratified_split(ds.labels, targets, rng)
    else:
        part_indices = _plain_split(ds.n, targets, rng)

    roles = (DatasetRole.TRAIN, DatasetRole.SUBSTITUTE, DatasetRole.HELD_OUT)
    names = ("train", "substitute", "held_out")
    out = []
    for idx, role, tag in zip(part_indices, roles, names):
        idx = np.sort(idx)
        out.append(
            TimeSeriesDataset(
                values=ds.values[idx],
                labels=ds.labels[idx] if ds.has_labels else None,
                name=f"{ds.name}/{tag}",
                role=role,
            )
        )
    while len(out) < 3:
        out.append(None)
    return tuple(out)


def _part_sizes(n: int, parts: int) -> list:
    base, rem = divmod(n, parts)
    return [base + 1 if i < rem else base for i in range(parts)]


def _plain_split(n: int, targets: list, rng) -> list:
    perm = rng.permutation(n)
    out, start = [], 0
    for size in targets:
        out.append(perm[start : start + size])
        start += size
    return out


def _stratified_split(labels: np.ndarray, targets: list, rng) -> list:
    """Deal each class across parts, respecting the exact part sizes."""
    parts = len(targets)
    remaining = list(targets)
    buckets = [[] for _ in range(parts)]
    for cls in np.unique(labels):
        idx = np.flatnonzero(labels == cls)
        idx = idx[rng.permutation(len(idx))]
        base, rem = divmod(len(idx), parts)
        alloc = [base] * parts
        # give remainder instances to the parts with the most room left
        for p in sorted(range(parts), key=lambda p: -remaining[p])[:rem]:
            alloc[p] += 1
        start = 0
        for p in range(parts):
            buckets[p].extend(idx[start : start + alloc[p]])
            remaining[p] -= alloc[p]
            start += alloc[p]
    # fix any residual imbalance caused by stacked per-class rounding
    overfull = [p for p in range(parts) if remaining[p] < 0]
    underfull = [p for p in range(parts) if remaining[p] > 0]
    for src in overfull:
        while remaining[src] < 0:
            dst = next(p for p in underfull if remaining[p] > 0)
            buckets[dst].append(buckets[src].pop())
            remaining[src] += 1
            remaining[dst] -= 1
    return [np.asarray(b, dtype=np.int64) for b in buckets]

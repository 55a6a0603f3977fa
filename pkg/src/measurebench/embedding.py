"""Vector representations and [0, 1] scaling for measure inputs.

Two embedders are shipped: the trivial channel concatenation and a fixed
set of 24 per-channel statistical descriptors. Both are deterministic and
seed-free; the statistical embedder standardizes its descriptors with
training-set statistics only, so nothing leaks from the synthetic side.
"""

from __future__ import annotations

import numpy as np

from .datatypes import EmbeddedDataset, TimeSeriesDataset
from .kernels import approximate_entropy, autocorr_fft


class EmbeddingError(ValueError):
    pass


def scale_unit(ds: TimeSeriesDataset, reference: TimeSeriesDataset) -> TimeSeriesDataset:
    """Per-channel min-max scaling with the reference (training) statistics.

    Values outside the reference range map outside [0, 1]; constant
    reference channels map to 0.5 everywhere.
    """
    lo = reference.values.min(axis=(0, 1))
    hi = reference.values.max(axis=(0, 1))
    span = hi - lo
    active = span > 0
    out = np.full_like(ds.values, 0.5)
    out[:, :, active] = (ds.values[:, :, active] - lo[active]) / span[active]
    return ds.replace(values=out)


def _safe_std(x: np.ndarray) -> float:
    return float(np.std(x))


def _lag_corr(x: np.ndarray, lag: int) -> float:
    if len(x) <= lag + 1:
        return 0.0
    return float(autocorr_fft(x, lag)[lag - 1])


def _sign_changes(x: np.ndarray) -> int:
    signs = np.sign(x)
    signs = signs[signs != 0]
    if len(signs) < 2:
        return 0
    return int(np.sum(signs[1:] != signs[:-1]))


def _longest_run_above_mean(x: np.ndarray) -> float:
    above = x > x.mean()
    best = run = 0
    for flag in above:
        run = run + 1 if flag else 0
        best = max(best, run)
    return float(best)


def _spectrum(x: np.ndarray) -> np.ndarray:
    power = np.abs(np.fft.rfft(x - x.mean())) ** 2
    return power[1:]  # drop the DC bin


def channel_descriptors(x: np.ndarray) -> np.ndarray:
    """The fixed, ordered 24-descriptor summary of one univariate series."""
    x = np.asarray(x, dtype=np.float64)
    l = len(x)
    std = _safe_std(x)
    centered = x - x.mean()
    diffs = np.diff(x)
    if std > 0:
        z = centered / std
        skew = float(np.mean(z**3))
        kurt = float(np.mean(z**4) - 3.0)
    else:
        skew = kurt = 0.0
    q75, q25 = np.percentile(x, [75, 25])
    power = _spectrum(x)
    total_power = float(power.sum())
    if total_power > 0:
        freqs = np.arange(1, len(power) + 1, dtype=np.float64)
        centroid = float((freqs * power).sum() / total_power)
        p = power / total_power
        p = p[p > 0]
        spec_entropy = float(-(p * np.log(p)).sum())
        dom_ratio = float(power.max() / total_power)
    else:
        centroid = spec_entropy = dom_ratio = 0.0
    t = np.arange(l, dtype=np.float64)
    slope = float(np.dot(t - t.mean(), centered) / np.dot(t - t.mean(), t - t.mean()))
    var_x = float(np.var(x))
    var_d = float(np.var(diffs)) if len(diffs) else 0.0
    mobility = float(np.sqrt(var_d / var_x)) if var_x > 0 else 0.0
    return np.array(
        [
            float(x.mean()),
            std,
            skew,
            kurt,
            float(x.min()),
            float(x.max()),
            float(np.median(x)),
            float(q75 - q25),
            float(x[0]),
            float(x[-1]),
            _lag_corr(x, 1),
            _lag_corr(x, 2),
            _lag_corr(x, 5),
            _sign_changes(centered) / (l - 1),
            _longest_run_above_mean(x),
            centroid,
            spec_entropy,
            dom_ratio,
            slope,
            float(np.mean(np.abs(diffs))) if len(diffs) else 0.0,
            float(np.std(diffs)) if len(diffs) else 0.0,
            approximate_entropy(x, m=2),
            _sign_changes(np.cumsum(centered)),
            mobility,
        ]
    )


N_DESCRIPTORS = 24


def raw_stat_features(ds: TimeSeriesDataset) -> np.ndarray:
    """Unstandardized (n, 24 * d) descriptor matrix, channels concatenated."""
    if ds.length < 8:
        raise EmbeddingError("statistical descriptors need l >= 8")
    rows = np.empty((ds.n, N_DESCRIPTORS * ds.channels))
    for i in range(ds.n):
        parts = [channel_descriptors(ds.values[i, :, c]) for c in range(ds.channels)]
        rows[i] = np.concatenate(parts)
    return rows


class ConcatEmbedder:
    """Channel concatenation: (l, d) -> (l * d,), channel-major order."""

    id = "concat"

    def fit(self, train: TimeSeriesDataset) -> "ConcatEmbedder":
        return self

    def transform(self, ds: TimeSeriesDataset) -> EmbeddedDataset:
        vectors = np.moveaxis(ds.values, 1, 2).reshape(ds.n, ds.length * ds.channels)
        return EmbeddedDataset(vectors=vectors, source=ds.name, embedder=self.id)


class StatFeatureEmbedder:
    """24 statistical descriptors per channel, standardized on training data.

    Zero-variance descriptors pass through unstandardized.
    """

    id = "statfeat"

    def __init__(self):
        self._mean = None
        self._std = None

    def fit(self, train: TimeSeriesDataset) -> "StatFeatureEmbedder":
        raw = raw_stat_features(train)
        self._mean = raw.mean(axis=0)
        self._std = raw.std(axis=0)
        return self

    def transform(self, ds: TimeSeriesDataset) -> EmbeddedDataset:
        if self._mean is None:
            raise EmbeddingError("statfeat embedder used before fit()")
        raw = raw_stat_features(ds)
        active = self._std > 0
        out = raw.copy()
        out[:, active] = (raw[:, active] - self._mean[active]) / self._std[active]
        return EmbeddedDataset(vectors=out, source=ds.name, embedder=self.id)


EMBEDDER_IDS = ("concat", "statfeat")


def make_embedder(embedder_id: str):
    if embedder_id == "concat":
        return ConcatEmbedder()
    if embedder_id == "statfeat":
        return StatFeatureEmbedder()
    raise EmbeddingError(f"unknown embedder {embedder_id!r}")

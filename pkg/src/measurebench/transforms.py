"""The pseudo-generator: kappa-modulated dataset transformations.

Every transformation maps (dataset, kappa, seed) to a dataset of identical
shape and is a pure, deterministic function of its context. kappa = 0 is
the identity (up to reconstruction error for the decomposition-based ones);
the substitute-based transformations instead start from the substitute set.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np
from statsmodels.tsa.seasonal import STL

from .datatypes import TimeSeriesDataset, DatasetRole, derive_rng


class TransformError(ValueError):
    """Transformation misuse: missing inputs or violated preconditions."""


class InapplicableError(TransformError):
    """The transformation cannot run on this dataset; the test is skipped."""


@dataclass
class TransformationContext:
    """Inputs of one transformation invocation.

    d_train is the dataset being transformed (the chain rebinds it between
    elements); d_rs is the substitute set, only read by the transformations
    flagged as substitute-consuming.
    """

    d_train: TimeSeriesDataset
    d_rs: Optional[TimeSeriesDataset]
    kappa: float
    seed: int
    chain_position: int = 0

    def rng(self, op: str) -> np.random.Generator:
        return derive_rng(self.seed, op, self.chain_position,
                          int(round(self.kappa * 1e9)))

    def rng_kappa_free(self, op: str) -> np.random.Generator:
        """Stream independent of kappa, for draws shared along the path."""
        return derive_rng(self.seed, op, self.chain_position)


def _result(ctx: TransformationContext, values, labels="keep",
            base: Optional[TimeSeriesDataset] = None) -> TimeSeriesDataset:
    src = base if base is not None else ctx.d_train
    out = src.replace(values=values, labels=labels, role=DatasetRole.SYNTHETIC)
    return out


def _channel_ranges(values: np.ndarray):
    lo = values.min(axis=(0, 1))
    hi = values.max(axis=(0, 1))
    span = hi - lo
    active = span > 0
    return lo, span, active


# ---------------------------------------------------------------------------

def shuffle(ctx: TransformationContext) -> TimeSeriesDataset:
    """Seeded permutation of instance order; independent of kappa."""
    ds = ctx.d_train
    perm = ctx.rng_kappa_free("shuffle").permutation(ds.n)
    return _result(ctx, ds.values[perm],
                   labels=ds.labels[perm] if ds.has_labels else None)


def gaussian_noise(ctx: TransformationContext) -> TimeSeriesDataset:
    """Additive N(0, kappa/2) noise in per-channel [0, 1] scale."""
    ds = ctx.d_train
    if ctx.kappa == 0.0:
        return _result(ctx, ds.values.copy())
    lo, span, active = _channel_ranges(ds.values)
    noise = ctx.rng("gaussian_noise").normal(
        0.0, math.sqrt(ctx.kappa / 2.0), size=ds.values.shape
    )
    out = ds.values.copy()
    scaled = (out[:, :, active] - lo[active]) / span[active]
    out[:, :, active] = (scaled + noise[:, :, active]) * span[active] + lo[active]
    return _result(ctx, out)


def label_corruption(ctx: TransformationContext) -> TimeSeriesDataset:
    """Pairwise label swaps among kappa/10 of the instances; values untouched."""
    ds = ctx.d_train
    if not ds.has_labels:
        raise TransformError("label_corruption requires labeled data")
    count = int(math.floor(ctx.kappa / 10.0 * ds.n))
    count -= count % 2
    labels = ds.labels.copy()
    if count > 0:
        chosen = ctx.rng("label_corruption").permutation(ds.n)[:count]
        first, second = chosen[0::2], chosen[1::2]
        labels[first], labels[second] = labels[second].copy(), labels[first].copy()
    return _result(ctx, ds.values, labels=labels)


SEAM_BLEND_WEIGHTS = (0.75, 0.5, 0.25)


def misalignment(ctx: TransformationContext) -> TimeSeriesDataset:
    """Cyclic per-channel rotation with probability kappa, seam smoothed.

    Rotation amounts are uniform in [1, max(1, floor(kappa * (l - 1)))]. The
    discontinuity between the formerly last and first samples is narrowed by
    blending three samples on each side toward the seam midpoint.
    """
    ds = ctx.d_train
    if ds.channels < 2:
        raise TransformError("misalignment requires d>1")
    n, l, d = ds.values.shape
    rng = ctx.rng("misalignment")
    apply_mask = rng.random((n, d)) < ctx.kappa
    p_max = max(1, int(math.floor(ctx.kappa * (l - 1))))
    amounts = rng.integers(1, p_max + 1, size=(n, d))
    out = ds.values.copy()
    for i, c in zip(*np.nonzero(apply_mask)):
        p = int(amounts[i, c])
        rolled = np.roll(out[i, :, c], p)
        mid = 0.5 * (rolled[(p - 1) % l] + rolled[p % l])
        for j, w in enumerate(SEAM_BLEND_WEIGHTS):
            left = (p - 1 - j) % l
            right = (p + j) % l
            rolled[left] = (1 - w) * rolled[left] + w * mid
            rolled[right] = (1 - w) * rolled[right] + w * mid
        out[i, :, c] = rolled
    return _result(ctx, out)


MODE_COLLAPSE_SIGMA = 0.025  # in [0, 1]-scaled space


def mode_collapse(ctx: TransformationContext) -> TimeSeriesDataset:
    """Per class, kappa of the instances become noisy duplicates of survivors."""
    ds = ctx.d_train
    if not ds.has_labels:
        raise TransformError("mode_collapse requires labeled data")
    rng = ctx.rng("mode_collapse")
    out = ds.values.copy()
    lo, span, active = _channel_ranges(ds.values)
    for cls in np.unique(ds.labels):
        idx = np.flatnonzero(ds.labels == cls)
        size = len(idx)
        drop = int(math.floor(ctx.kappa * size))
        if drop >= size:
            if size == 1:
                warnings.warn(f"class {cls}: single instance kept as is")
            drop = size - 1
        if drop == 0:
            continue
        idx = idx[rng.permutation(size)]
        removed, survivors = idx[:drop], idx[drop:]
        sources = survivors[rng.integers(0, len(survivors), size=drop)]
        dup = ds.values[sources].copy()
        noise = rng.normal(0.0, MODE_COLLAPSE_SIGMA, size=dup.shape)
        dup[:, :, active] += noise[:, :, active] * span[active]
        out[removed] = dup
    return _result(ctx, out)


def mode_dropping(ctx: TransformationContext) -> TimeSeriesDataset:
    """Drop floor(kappa * #classes) smallest-index classes; refill slots
    by resampling the remaining instances (proportional to class size)."""
    ds = ctx.d_train
    if not ds.has_labels:
        raise TransformError("mode_dropping requires labeled data")
    classes = np.unique(ds.labels)
    if len(classes) < 2:
        raise TransformError("mode_dropping requires at least 2 classes")
    drop = int(math.floor(ctx.kappa * len(classes)))
    if drop >= len(classes):
        warnings.warn("mode_dropping: capping at #classes - 1")
        drop = len(classes) - 1
    if drop == 0:
        return _result(ctx, ds.values.copy(), labels=ds.labels.copy())
    dropped = set(classes[:drop])
    victim = np.isin(ds.labels, list(dropped))
    keep_idx = np.flatnonzero(~victim)
    rng = ctx.rng("mode_dropping")
    sources = keep_idx[rng.integers(0, len(keep_idx), size=int(victim.sum()))]
    values = ds.values.copy()
    labels = ds.labels.copy()
    values[victim] = ds.values[sources]
    labels[victim] = ds.labels[sources]
    return _result(ctx, values, labels=labels)


def moving_average(ctx: TransformationContext) -> TimeSeriesDataset:
    """Centered moving average of odd width a*l*kappa + 1; edges shrink."""
    ds = ctx.d_train
    n, l, d = ds.values.shape
    a = 1.0 / 3.0 if l >= 30 else 1.0
    width = int(math.floor(a * l * ctx.kappa + 1.0 + 1e-9))
    if width % 2 == 0:
        width += 1
    if width <= 1:
        return _result(ctx, ds.values.copy())
    half = (width - 1) // 2
    csum = np.zeros((n, l + 1, d))
    np.cumsum(ds.values, axis=1, out=csum[:, 1:, :])
    pos = np.arange(l)
    lo = np.maximum(pos - half, 0)
    hi = np.minimum(pos + half, l - 1)
    sums = csum[:, hi + 1, :] - csum[:, lo, :]
    counts = (hi - lo + 1).astype(np.float64)
    return _result(ctx, sums / counts[None, :, None])


def rare_event_drop(ctx: TransformationContext) -> TimeSeriesDataset:
    """Replace kappa of the smallest class with other-class substitutes."""
    ds = ctx.d_train
    if not ds.has_labels:
        raise TransformError("rare_event_drop requires labeled data")
    if ctx.d_rs is None:
        raise TransformError("rare_event_drop requires a substitute dataset")
    if not ctx.d_rs.has_labels:
        raise TransformError("rare_event_drop requires a labeled substitute set")
    hist = ds.class_histogram()
    smallest = min(hist, key=lambda cls: (hist[cls], cls))
    small_idx = np.flatnonzero(ds.labels == smallest)
    count = int(math.floor(ctx.kappa * len(small_idx)))
    values = ds.values.copy()
    labels = ds.labels.copy()
    if count > 0:
        candidates = np.flatnonzero(ctx.d_rs.labels != smallest)
        if len(candidates) == 0:
            raise TransformError(
                "substitute set has no instances outside the smallest class"
            )
        rng = ctx.rng("rare_event_drop")
        targets = small_idx[rng.permutation(len(small_idx))[:count]]
        sources = rng.choice(candidates, size=count, replace=len(candidates) < count)
        values[targets] = ctx.d_rs.values[sources]
        labels[targets] = ctx.d_rs.labels[sources]
    return _result(ctx, values, labels=labels)


REVERSE_SUBSTITUTION_MAX_LEAKS = 10


def reverse_substitution(ctx: TransformationContext) -> TimeSeriesDataset:
    """Output is the substitute set with round(10 * kappa) training leaks.

    The leak positions and sources are drawn once per seed, so increasing
    kappa grows the leaked set instead of resampling it.
    """
    ds = ctx.d_train
    if ctx.d_rs is None:
        raise TransformError("reverse_substitution requires a substitute dataset")
    max_leaks = REVERSE_SUBSTITUTION_MAX_LEAKS
    if ctx.d_rs.n < max_leaks or ds.n < max_leaks:
        raise TransformError(f"reverse_substitution needs >= {max_leaks} instances")
    rng = ctx.rng_kappa_free("reverse_substitution")
    positions = rng.choice(ctx.d_rs.n, size=max_leaks, replace=False)
    sources = rng.choice(ds.n, size=max_leaks, replace=False)
    count = int(round(max_leaks * ctx.kappa))
    values = ctx.d_rs.values.copy()
    labels = ctx.d_rs.labels.copy() if ctx.d_rs.has_labels else None
    values[positions[:count]] = ds.values[sources[:count]]
    if labels is not None and ds.has_labels:
        labels[positions[:count]] = ds.labels[sources[:count]]
    return _result(ctx, values, labels=labels, base=ctx.d_rs)


def salt_and_pepper(ctx: TransformationContext) -> TimeSeriesDataset:
    """Each scalar becomes channel-min or channel-max with probability kappa/4 each.

    0 and 1 in the scaled space are written back as the exact channel
    extremes; untouched scalars stay bitwise identical.
    """
    ds = ctx.d_train
    if ctx.kappa == 0.0:
        return _result(ctx, ds.values.copy())
    lo = ds.values.min(axis=(0, 1))
    hi = ds.values.max(axis=(0, 1))
    active = (hi - lo) > 0
    u = ctx.rng("salt_and_pepper").random(ds.values.shape)
    out = ds.values.copy()
    channel = np.broadcast_to(np.arange(ds.channels)[None, None, :], out.shape)
    pepper = (u < ctx.kappa / 4.0) & active[channel]
    salt = (u >= ctx.kappa / 4.0) & (u < ctx.kappa / 2.0) & active[channel]
    out[pepper] = lo[channel[pepper]]
    out[salt] = hi[channel[salt]]
    return _result(ctx, out)


SEGMENT_LEAKING_MAX_SEGMENTS = 30


def segment_leaking(ctx: TransformationContext) -> TimeSeriesDataset:
    """Substitute set with round(30 * kappa) single-channel training segments.

    Segment lengths are uniform in [ceil(l/4), floor(l/2)]; (instance,
    channel) slots are drawn without replacement while possible so distinct
    segments do not overlap. Draws are shared along the kappa path.
    """
    ds = ctx.d_train
    if ctx.d_rs is None:
        raise TransformError("segment_leaking requires a substitute dataset")
    n, l, d = ctx.d_rs.values.shape
    if l < 8:
        raise InapplicableError("segment_leaking requires l >= 8")
    max_segments = SEGMENT_LEAKING_MAX_SEGMENTS
    rng = ctx.rng_kappa_free("segment_leaking")
    slots = n * d
    if slots >= max_segments:
        flat = rng.choice(slots, size=max_segments, replace=False)
    else:
        flat = rng.integers(0, slots, size=max_segments)
    instances, channels = flat // d, flat % d
    len_lo, len_hi = math.ceil(l / 4), math.floor(l / 2)
    lengths = rng.integers(len_lo, len_hi + 1, size=max_segments)
    starts = rng.integers(0, l - lengths + 1)
    sources = rng.integers(0, ds.n, size=max_segments)

    count = int(round(max_segments * ctx.kappa))
    values = ctx.d_rs.values.copy()
    for i in range(count):
        s, e = int(starts[i]), int(starts[i] + lengths[i])
        values[instances[i], s:e, channels[i]] = ds.values[sources[i], s:e, channels[i]]
    labels = ctx.d_rs.labels.copy() if ctx.d_rs.has_labels else None
    return _result(ctx, values, labels=labels, base=ctx.d_rs)


def _dominant_periods(values: np.ndarray) -> np.ndarray:
    """Per-channel dominant FFT period, capped to [2, l // 2]."""
    n, l, d = values.shape
    spectrum = np.abs(np.fft.rfft(values - values.mean(axis=1, keepdims=True), axis=1)) ** 2
    mean_power = spectrum.mean(axis=0)  # (freqs, d)
    periods = np.empty(d, dtype=np.int64)
    for c in range(d):
        power = mean_power[1:, c]  # skip the zero frequency
        freq = int(np.argmax(power)) + 1 if power.size else 1
        periods[c] = min(max(int(round(l / freq)), 2), l // 2)
    return periods


def stl_transform(ctx: TransformationContext) -> TimeSeriesDataset:
    """Season/trend/residual recombination with random multipliers.

    Each channel is decomposed with STL (LOESS); the three components are
    recombined as (k*u1 + 1)*s + (k*u2 + 1)*t + (k*u3 + 1)*r with
    u ~ U[-1, 1] drawn independently per (instance, channel).
    """
    ds = ctx.d_train
    n, l, d = ds.values.shape
    if l < 4:
        raise InapplicableError("stl_transform requires l >= 4")
    periods = _dominant_periods(ds.values)
    u = ctx.rng("stl_transform").uniform(-1.0, 1.0, size=(n, d, 3))
    out = np.empty_like(ds.values)
    for c in range(d):
        period = int(periods[c])
        trend = int(math.ceil(1.5 * period))
        trend = max(trend, period + 1, 3)
        if trend % 2 == 0:
            trend += 1
        for i in range(n):
            res = STL(ds.values[i, :, c], period=period, seasonal=7, trend=trend).fit()
            mult = ctx.kappa * u[i, c] + 1.0
            out[i, :, c] = (
                mult[0] * res.seasonal + mult[1] * res.trend + mult[2] * res.resid
            )
    return _result(ctx, out)


def substitution(ctx: TransformationContext) -> TimeSeriesDataset:
    """Replace floor(kappa * n) instances with distinct substitute instances."""
    ds = ctx.d_train
    if ctx.d_rs is None:
        raise TransformError("substitution requires a substitute dataset")
    count = int(math.floor(ctx.kappa * ds.n))
    if count > ctx.d_rs.n:
        raise TransformError(
            f"substitution needs {count} substitute instances, have {ctx.d_rs.n}"
        )
    values = ds.values.copy()
    labels = ds.labels.copy() if ds.has_labels else None
    if count > 0:
        rng = ctx.rng("substitution")
        targets = rng.permutation(ds.n)[:count]
        sources = rng.choice(ctx.d_rs.n, size=count, replace=False)
        values[targets] = ctx.d_rs.values[sources]
        if labels is not None and ctx.d_rs.has_labels:
            labels[targets] = ctx.d_rs.labels[sources]
    return _result(ctx, values, labels=labels)


# Orthonormal Daubechies-2 scaling filter.
_SQRT3 = math.sqrt(3.0)
_DB2_LO = np.array(
    [(1 + _SQRT3), (3 + _SQRT3), (3 - _SQRT3), (1 - _SQRT3)]
) / (4.0 * math.sqrt(2.0))
_DB2_HI = np.array([_DB2_LO[3], -_DB2_LO[2], _DB2_LO[1], -_DB2_LO[0]])

_WAVELET_MATRIX_CACHE: dict = {}


def _wavelet_matrices(length: int):
    """Periodized single-level analysis matrices (approx, detail) rows."""
    if length in _WAVELET_MATRIX_CACHE:
        return _WAVELET_MATRIX_CACHE[length]
    half = length // 2
    approx = np.zeros((half, length))
    detail = np.zeros((half, length))
    for k in range(half):
        for m in range(4):
            approx[k, (2 * k + m) % length] += _DB2_LO[m]
            detail[k, (2 * k + m) % length] += _DB2_HI[m]
    _WAVELET_MATRIX_CACHE[length] = (approx, detail)
    return approx, detail


def wavelet_transform(ctx: TransformationContext) -> TimeSeriesDataset:
    """Single-level DWT; approximation coefficients scaled by (1 - kappa).

    Uses the orthonormal db2 filter bank with periodic extension, so the
    kappa = 0 round trip reconstructs to machine precision. Odd lengths are
    padded by one repeated sample and cropped after the inverse.
    """
    ds = ctx.d_train
    n, l, d = ds.values.shape
    if l < 4:
        raise InapplicableError("wavelet_transform requires l >= 4")
    x = ds.values
    padded = l % 2 == 1
    if padded:
        x = np.concatenate([x, x[:, -1:, :]], axis=1)
    length = x.shape[1]
    approx_mat, detail_mat = _wavelet_matrices(length)
    flat = np.moveaxis(x, 1, 2).reshape(n * d, length)
    approx = flat @ approx_mat.T
    detail = flat @ detail_mat.T
    approx *= 1.0 - ctx.kappa
    recon = approx @ approx_mat + detail @ detail_mat
    out = np.moveaxis(recon.reshape(n, d, length), 2, 1)
    if padded:
        out = out[:, :l, :]
    return _result(ctx, out)


def wavelet_coefficients(values: np.ndarray):
    """Forward transform only; used by tests to inspect the coefficients."""
    n, l, d = values.shape
    x = values
    if l % 2 == 1:
        x = np.concatenate([x, x[:, -1:, :]], axis=1)
    approx_mat, detail_mat = _wavelet_matrices(x.shape[1])
    flat = np.moveaxis(x, 1, 2).reshape(n * d, x.shape[1])
    return flat @ approx_mat.T, flat @ detail_mat.T


# ---------------------------------------------------------------------------

_IMPLEMENTATIONS = {
    "shuffle": shuffle,
    "gaussian_noise": gaussian_noise,
    "label_corruption": label_corruption,
    "misalignment": misalignment,
    "mode_collapse": mode_collapse,
    "mode_dropping": mode_dropping,
    "moving_average": moving_average,
    "rare_event_drop": rare_event_drop,
    "reverse_substitution": reverse_substitution,
    "salt_and_pepper": salt_and_pepper,
    "segment_leaking": segment_leaking,
    "stl_transform": stl_transform,
    "substitution": substitution,
    "wavelet_transform": wavelet_transform,
}


def implementation_for(transform_id: str):
    return _IMPLEMENTATIONS[transform_id]


def apply_chain(chain: Sequence[str], d_train: TimeSeriesDataset,
                d_rs: Optional[TimeSeriesDataset], kappa: float,
                seed: int) -> TimeSeriesDataset:
    """Apply one or two transformations sequentially with a shared kappa."""
    from .registry import canonical_transform_id

    if not 1 <= len(chain) <= 2:
        raise TransformError("transformation chains hold 1 or 2 elements")
    current = d_train
    for position, name in enumerate(chain):
        op = canonical_transform_id(name)
        if op not in _IMPLEMENTATIONS:
            raise TransformError(f"unknown transformation {name!r}")
        ctx = TransformationContext(
            d_train=current, d_rs=d_rs, kappa=float(kappa), seed=seed,
            chain_position=position,
        )
        current = _IMPLEMENTATIONS[op](ctx)
    return current

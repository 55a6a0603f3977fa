"""Distance- and correlation-based measures on raw series.

ICD, INND, ONND (dynamic time warping), ApEn regularity, autocorrelation,
spatial and temporal correlation, and feature-correlation analysis. The
quadratic-cost measures subsample both sides to 100 instances with the
test seed.
"""

from __future__ import annotations

import numpy as np
import scipy.stats

from ..kernels import (
    approximate_entropy,
    autocorr_fft,
    dtw_matrix,
    pearson_corr_matrix,
)
from . import MeasureError, MeasureInput, MeasureResult, subsample_indices


def _subsampled_values(inp: MeasureInput, measure_id: str):
    real = inp.d_train.values
    synth = inp.d_synth.values
    ri = subsample_indices(inp.seed, measure_id, len(real))
    si = subsample_indices(inp.seed, measure_id, len(synth))
    return real[ri], synth[si]


def icd(inp: MeasureInput) -> MeasureResult:
    """Mean pairwise DTW distance within the synthetic set (incl. self-pairs)."""
    _, synth = _subsampled_values(inp, "icd")
    dists = dtw_matrix(synth, synth)
    return MeasureResult(float(dists.sum() / (len(synth) ** 2)))


def innd(inp: MeasureInput) -> MeasureResult:
    """Mean DTW distance of each synthetic series to its nearest real one."""
    real, synth = _subsampled_values(inp, "innd")
    return MeasureResult(float(dtw_matrix(synth, real).min(axis=1).mean()))


def onnd(inp: MeasureInput) -> MeasureResult:
    """Mean DTW distance of each real series to its nearest synthetic one."""
    real, synth = _subsampled_values(inp, "onnd")
    return MeasureResult(float(dtw_matrix(real, synth).min(axis=1).mean()))


def ap_en(inp: MeasureInput) -> MeasureResult:
    """Mean squared per-channel difference of approximate entropies."""
    real, synth = _subsampled_values(inp, "ap_en")
    d = real.shape[2]
    total = 0.0
    for c in range(d):
        r = np.mean([approximate_entropy(series[:, c]) for series in real])
        s = np.mean([approximate_entropy(series[:, c]) for series in synth])
        total += (r - s) ** 2
    return MeasureResult(total / d)


def _mean_autocorr(values: np.ndarray, max_lag: int) -> np.ndarray:
    n, _, d = values.shape
    out = np.zeros((d, max_lag))
    for c in range(d):
        for i in range(n):
            out[c] += autocorr_fft(values[i, :, c], max_lag)
    return out / n


def auto_corr(inp: MeasureInput) -> MeasureResult:
    """Mean squared difference of per-channel autocorrelations, lags 1..l/4."""
    max_lag = inp.d_train.length // 4
    if max_lag < 1:
        raise MeasureError("auto_corr: series too short for lag l/4")
    a = _mean_autocorr(inp.d_train.values, max_lag)
    b = _mean_autocorr(inp.d_synth.values, max_lag)
    return MeasureResult(float(((a - b) ** 2).mean()))


def _mean_channel_corr(values: np.ndarray) -> np.ndarray:
    mats = [pearson_corr_matrix(instance) for instance in values]
    return np.mean(mats, axis=0)


def spatial(inp: MeasureInput) -> MeasureResult:
    """Squared difference of mean inter-channel Pearson matrices."""
    if inp.d_train.channels < 2:
        raise MeasureError(
            "Cannot compute Pearson correlation for any of the given samples"
        )
    real, synth = _subsampled_values(inp, "spatial")
    a = _mean_channel_corr(real)
    b = _mean_channel_corr(synth)
    iu = np.triu_indices(a.shape[0], k=1)
    return MeasureResult(float(((a[iu] - b[iu]) ** 2).mean()))


TEMPORAL_N_PEAKS = 3


def _peak_power_corr(values: np.ndarray, peak_bins: np.ndarray) -> np.ndarray:
    """Per channel: correlations across instances between the peak powers."""
    spectrum = np.abs(np.fft.rfft(values - values.mean(axis=1, keepdims=True), axis=1)) ** 2
    d = values.shape[2]
    stats = []
    for c in range(d):
        powers = spectrum[:, peak_bins[c], c]  # (n, n_peaks)
        corr = pearson_corr_matrix(powers)
        iu = np.triu_indices(corr.shape[0], k=1)
        stats.append(corr[iu])
    return np.asarray(stats)


def temporal(inp: MeasureInput) -> MeasureResult:
    """Mean squared difference of dominant-frequency power correlations.

    The peak frequencies are the top three of the real side's mean
    spectrum, evaluated per channel on both sides.
    """
    real, synth = _subsampled_values(inp, "temporal")
    spectrum = np.abs(np.fft.rfft(real - real.mean(axis=1, keepdims=True), axis=1)) ** 2
    mean_power = spectrum.mean(axis=0)[1:]  # (freqs, d), DC removed
    if mean_power.shape[0] < TEMPORAL_N_PEAKS:
        raise MeasureError("temporal: series too short for three frequency peaks")
    d = real.shape[2]
    peak_bins = np.empty((d, TEMPORAL_N_PEAKS), dtype=np.int64)
    for c in range(d):
        top = np.argsort(mean_power[:, c])[::-1][:TEMPORAL_N_PEAKS]
        peak_bins[c] = np.sort(top) + 1  # undo the DC offset
    a = _peak_power_corr(real, peak_bins)
    b = _peak_power_corr(synth, peak_bins)
    return MeasureResult(float(((a - b) ** 2).mean()))


def _rank_corr(a: np.ndarray, b: np.ndarray):
    """(kendall, spearman) with degenerate inputs mapped to exact agreement."""
    if np.allclose(a, b):
        return 1.0, 1.0
    if np.std(a) == 0 or np.std(b) == 0:
        return 0.0, 0.0
    kendall = float(scipy.stats.kendalltau(a, b).statistic)
    spearman = float(scipy.stats.spearmanr(a, b).statistic)
    return kendall, spearman


def fbca(inp: MeasureInput) -> MeasureResult:
    """Five statistics between the feature-correlation matrices, averaged.

    The rank correlations enter the scalar as (1 - coefficient) so all five
    components share the lower-is-better direction; the raw values are kept
    in the extras.
    """
    xe, ye = inp.require_embedded("fbca")
    corr_r = pearson_corr_matrix(xe)
    corr_s = pearson_corr_matrix(ye)
    iu = np.triu_indices(corr_r.shape[0], k=1)
    a, b = corr_r[iu], corr_s[iu]
    if a.size == 0:
        raise MeasureError("fbca: embedding dimension too small")
    mae = float(np.abs(a - b).mean())
    mse = float(((a - b) ** 2).mean())
    frob = float(np.linalg.norm(corr_r - corr_s))
    kendall, spearman = _rank_corr(a, b)
    extras = {"mae": mae, "mse": mse, "frobenius": frob,
              "kendall": kendall, "spearman": spearman}
    score = float(np.mean([mae, mse, frob, 1.0 - kendall, 1.0 - spearman]))
    return MeasureResult(score, extras)


IMPLEMENTATIONS = {
    "icd": icd,
    "innd": innd,
    "onnd": onnd,
    "ap_en": ap_en,
    "auto_corr": auto_corr,
    "spatial": spatial,
    "temporal": temporal,
    "fbca": fbca,
}

"""Cosine-similarity measures: ACS, Max-RTS, RTS, STS."""

from __future__ import annotations

import numpy as np

from ..embedding import channel_descriptors
from . import MeasureError, MeasureInput, MeasureResult, subsample_indices

ACS_N_STATS = 7  # the first seven statistical descriptors
RTS_SYNTH_SAMPLES = 10
STS_NEIGHBORS = 5


def _normalize_rows(vectors: np.ndarray):
    """Unit-normalize rows; zero-norm rows are flagged for skipping."""
    norms = np.linalg.norm(vectors, axis=1)
    valid = norms > 0
    out = np.zeros_like(vectors)
    out[valid] = vectors[valid] / norms[valid, None]
    return out, valid


def _stat_vectors(ds) -> np.ndarray:
    rows = np.empty((ds.n, ACS_N_STATS * ds.channels))
    for i in range(ds.n):
        parts = [channel_descriptors(ds.values[i, :, c])[:ACS_N_STATS]
                 for c in range(ds.channels)]
        rows[i] = np.concatenate(parts)
    return rows


def acs(inp: MeasureInput) -> MeasureResult:
    """Mean pairwise cosine similarity of per-series statistic vectors.

    With labels on both sides, pairs are formed within each class only.
    """
    x, x_valid = _normalize_rows(_stat_vectors(inp.d_train))
    y, y_valid = _normalize_rows(_stat_vectors(inp.d_synth))
    sims = x @ y.T
    mask = x_valid[:, None] & y_valid[None, :]
    if inp.d_train.has_labels and inp.d_synth.has_labels:
        same_class = inp.d_train.labels[:, None] == inp.d_synth.labels[None, :]
        mask &= same_class
    if not mask.any():
        raise MeasureError("acs: no valid instance pairs")
    return MeasureResult(float(sims[mask].mean()))


def max_rts(inp: MeasureInput) -> MeasureResult:
    """Largest real-to-synthetic cosine similarity in embedding space."""
    xe, ye = inp.require_embedded("max_rts")
    x, x_valid = _normalize_rows(xe)
    y, y_valid = _normalize_rows(ye)
    mask = x_valid[:, None] & y_valid[None, :]
    if not mask.any():
        raise MeasureError("max_rts: no valid instance pairs")
    return MeasureResult(float((x @ y.T)[mask].max()))


def rts(inp: MeasureInput) -> MeasureResult:
    """|mean real-to-sampled-synthetic similarity - mean within-real similarity|."""
    xe, ye = inp.require_embedded("rts")
    x, x_valid = _normalize_rows(xe)
    y, y_valid = _normalize_rows(ye)
    x = x[x_valid]
    y = y[y_valid]
    if len(x) < 2 or len(y) < 1:
        raise MeasureError("rts: too few valid instances")
    count = min(RTS_SYNTH_SAMPLES, len(y))
    chosen = inp.rng("rts").choice(len(y), size=count, replace=False)
    cross = float((x @ y[chosen].T).mean())
    within = x @ x.T
    iu = np.triu_indices(len(x), k=1)
    return MeasureResult(abs(cross - float(within[iu].mean())))


def sts(inp: MeasureInput) -> MeasureResult:
    """Mean similarity of each synthetic instance to five random others."""
    if inp.e_synth is None:
        raise MeasureError("sts requires embedded inputs")
    y, y_valid = _normalize_rows(inp.e_synth.vectors)
    y = y[y_valid]
    n = len(y)
    if n < 2:
        raise MeasureError("sts: too few valid instances")
    rng = inp.rng("sts")
    k = min(STS_NEIGHBORS, n - 1)
    total = 0.0
    for i in range(n):
        others = rng.choice(n - 1, size=k, replace=False)
        others = others + (others >= i)  # skip self
        total += float((y[others] @ y[i]).sum())
    return MeasureResult(total / (n * k))


IMPLEMENTATIONS = {
    "acs": acs,
    "max_rts": max_rts,
    "rts": rts,
    "sts": sts,
}

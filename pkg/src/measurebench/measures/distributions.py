"""Binned distribution distances and the Gaussian embedding distance."""

from __future__ import annotations

import numpy as np

from ..kernels import (
    frechet_gaussian,
    histogram_pmf,
    jensen_shannon,
    kullback_leibler,
    wasserstein_pmf,
)
from . import MeasureError, MeasureInput, MeasureResult

N_BINS = 100
COV_SHRINKAGE = 1e-3


def _embedded_pmfs(inp: MeasureInput, measure_id: str):
    xe, ye = inp.require_embedded(measure_id)
    x = xe.ravel()
    y = ye.ravel()
    lo = float(min(x.min(), y.min()))
    hi = float(max(x.max(), y.max()))
    p = histogram_pmf(x, N_BINS, lo, hi)
    q = histogram_pmf(y, N_BINS, lo, hi)
    width = (hi - lo) / N_BINS
    return p, q, width


def jsd(inp: MeasureInput) -> MeasureResult:
    p, q, _ = _embedded_pmfs(inp, "jsd")
    return MeasureResult(jensen_shannon(p, q))


def kld(inp: MeasureInput) -> MeasureResult:
    p, q, _ = _embedded_pmfs(inp, "kld")
    return MeasureResult(kullback_leibler(p, q))


def wd_on_pmf(inp: MeasureInput) -> MeasureResult:
    p, q, width = _embedded_pmfs(inp, "wd_on_pmf")
    return MeasureResult(wasserstein_pmf(p, q, width))


def distributional_metric(inp: MeasureInput) -> MeasureResult:
    """Mean absolute pmf difference of corresponding raw channels."""
    real = inp.d_train.values
    synth = inp.d_synth.values
    total = 0.0
    for c in range(real.shape[2]):
        x = real[:, :, c].ravel()
        y = synth[:, :, c].ravel()
        lo = float(min(x.min(), y.min()))
        hi = float(max(x.max(), y.max()))
        p = histogram_pmf(x, N_BINS, lo, hi)
        q = histogram_pmf(y, N_BINS, lo, hi)
        total += float(np.abs(p - q).mean())
    return MeasureResult(total / real.shape[2])


def context_fid(inp: MeasureInput) -> MeasureResult:
    """Frechet distance between Gaussian fits of the two embeddings."""
    xe, ye = inp.require_embedded("context_fid")
    if len(xe) < 2 or len(ye) < 2:
        raise MeasureError("context_fid needs at least 2 instances per side")
    mu1, mu2 = xe.mean(axis=0), ye.mean(axis=0)
    eye = np.eye(xe.shape[1])
    cov1 = np.cov(xe, rowvar=False) + COV_SHRINKAGE * eye
    cov2 = np.cov(ye, rowvar=False) + COV_SHRINKAGE * eye
    return MeasureResult(frechet_gaussian(mu1, cov1, mu2, cov2))


IMPLEMENTATIONS = {
    "jsd": jsd,
    "kld": kld,
    "wd_on_pmf": wd_on_pmf,
    "distributional_metric": distributional_metric,
    "context_fid": context_fid,
}

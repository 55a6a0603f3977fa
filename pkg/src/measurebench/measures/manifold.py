"""Neighborhood-manifold and typicality measures in embedding space.

Improved precision/recall, density, coverage (one shared kNN-radius pass)
and the spherical-support family: alpha-precision, beta-recall,
authenticity.
"""

from __future__ import annotations

import numpy as np

from ..kernels import knn_radius, pairwise_distances
from . import MeasureError, MeasureInput, MeasureResult

KNN_K = 5
TYPICALITY_GRID = np.round(np.arange(0.05, 0.951, 0.05), 2)
MIN_TYPICALITY_N = 20


def manifold_quadruple(real: np.ndarray, synth: np.ndarray, k: int = KNN_K,
                       need_recall: bool = True):
    """(precision, recall, density, coverage) from one pass of kNN radii.

    Recall needs radii on the synthetic side, so it is skipped (None) when
    not requested and the synthetic set is tiny.
    """
    if len(real) <= k:
        raise MeasureError(f"manifold measures need more than k={k} real instances")
    radii_real = knn_radius(real, k)
    dist = pairwise_distances(real, synth)  # (n_real, n_synth)
    inside_real_ball = dist < radii_real[:, None]
    precision = float(inside_real_ball.any(axis=0).mean())
    coverage = float(inside_real_ball.any(axis=1).mean())
    density = float(inside_real_ball.sum() / (k * len(synth)))
    recall = None
    if need_recall:
        if len(synth) <= k:
            raise MeasureError(f"improved recall needs more than k={k} synthetic instances")
        radii_synth = knn_radius(synth, k)
        recall = float((dist < radii_synth[None, :]).any(axis=1).mean())
    return precision, recall, density, coverage


def improved_precision(inp: MeasureInput) -> MeasureResult:
    real, synth = inp.require_embedded("improved_precision")
    return MeasureResult(manifold_quadruple(real, synth, need_recall=False)[0])


def improved_recall(inp: MeasureInput) -> MeasureResult:
    real, synth = inp.require_embedded("improved_recall")
    return MeasureResult(manifold_quadruple(real, synth)[1])


def density(inp: MeasureInput) -> MeasureResult:
    real, synth = inp.require_embedded("Density")
    return MeasureResult(manifold_quadruple(real, synth, need_recall=False)[2])


def coverage(inp: MeasureInput) -> MeasureResult:
    real, synth = inp.require_embedded("Coverage")
    return MeasureResult(manifold_quadruple(real, synth, need_recall=False)[3])


def _typicality_deviation(center_side: np.ndarray, probe_side: np.ndarray) -> float:
    """Mean |alpha - fraction of probes inside the alpha-ball| over the grid."""
    center = center_side.mean(axis=0)
    own_dists = np.linalg.norm(center_side - center, axis=1)
    probe_dists = np.linalg.norm(probe_side - center, axis=1)
    dev = 0.0
    for alpha in TYPICALITY_GRID:
        radius = float(np.quantile(own_dists, alpha))
        frac = float((probe_dists <= radius).mean())
        dev += abs(alpha - frac)
    return dev / len(TYPICALITY_GRID)


def alpha_precision(inp: MeasureInput) -> MeasureResult:
    """1 - mean deviation of synthetic mass inside the real typicality balls."""
    real, synth = inp.require_embedded("alpha_precision")
    if len(real) < MIN_TYPICALITY_N or len(synth) < MIN_TYPICALITY_N:
        raise MeasureError("alpha_precision needs at least 20 instances per side")
    return MeasureResult(1.0 - _typicality_deviation(real, synth))


def beta_recall(inp: MeasureInput) -> MeasureResult:
    """1 - mean deviation of reals covered by beta-typical synthetic points.

    A real instance counts as covered at level beta when its nearest
    synthetic neighbor belongs to the beta-typical synthetic support.
    """
    real, synth = inp.require_embedded("beta_recall")
    if len(real) < MIN_TYPICALITY_N or len(synth) < MIN_TYPICALITY_N:
        raise MeasureError("beta_recall needs at least 20 instances per side")
    center = synth.mean(axis=0)
    synth_dists = np.linalg.norm(synth - center, axis=1)
    nearest_synth = np.argmin(pairwise_distances(real, synth), axis=1)
    nearest_typicality = synth_dists[nearest_synth]
    dev = 0.0
    for beta in TYPICALITY_GRID:
        radius = float(np.quantile(synth_dists, beta))
        frac = float((nearest_typicality <= radius).mean())
        dev += abs(beta - frac)
    return MeasureResult(1.0 - dev / len(TYPICALITY_GRID))


def authenticity(inp: MeasureInput) -> MeasureResult:
    """Fraction of synthetic points farther from their nearest real neighbor
    than that neighbor is from its own nearest real point."""
    real, synth = inp.require_embedded("authenticity")
    if len(real) < 2:
        raise MeasureError("authenticity needs at least 2 real instances")
    real_self = knn_radius(real, 1)
    dist = pairwise_distances(synth, real)
    nearest = np.argmin(dist, axis=1)
    d_sr = dist[np.arange(len(synth)), nearest]
    return MeasureResult(float((real_self[nearest] < d_sr).mean()))


IMPLEMENTATIONS = {
    "improved_precision": improved_precision,
    "improved_recall": improved_recall,
    "Density": density,
    "Coverage": coverage,
    "alpha_precision": alpha_precision,
    "beta_recall": beta_recall,
    "authenticity": authenticity,
}

"""Cluster-binning measures (NDB family) and the data-copying test."""

from __future__ import annotations

import numpy as np

from ..kernels import (
    assign_to_centers,
    kmeans,
    mann_whitney_z,
    pairwise_distances,
    two_proportion_z,
)
from . import MeasureError, MeasureInput, MeasureResult

NDB_ALPHA = 0.05
NDB_MAX_CLUSTERS = 50
NDB_INSTANCES_PER_CLUSTER = 20
CT_MAX_CELLS = 10
CT_INSTANCES_PER_CELL = 50


def _ndb_clusters(inp: MeasureInput, measure_id: str):
    real, synth = inp.require_embedded(measure_id)
    k = min(NDB_MAX_CLUSTERS, len(real) // NDB_INSTANCES_PER_CLUSTER)
    if k < 2:
        raise MeasureError(
            "NDB-over/under: Too many cells in partition/No samples in a cell"
        )
    assignments, centers = kmeans(real, k, inp.rng(measure_id, "kmeans"))
    return real, synth, assignments, centers, k


def _different_bins(train_counts, n_train, other_counts, n_other, k: int):
    """Per-cluster Bonferroni-corrected two-proportion tests."""
    threshold = NDB_ALPHA / k
    flags, signs = [], []
    for c in range(k):
        z, p = two_proportion_z(int(train_counts[c]), n_train,
                                int(other_counts[c]), n_other)
        flags.append(p < threshold)
        signs.append(np.sign(z))
    return np.asarray(flags), np.asarray(signs)


def _cluster_counts(assignments: np.ndarray, k: int) -> np.ndarray:
    return np.bincount(assignments, minlength=k)


def ndb(inp: MeasureInput) -> MeasureResult:
    """|#different bins vs held-out - #different bins vs synthetic|."""
    if inp.e_held_out is None:
        raise MeasureError("ndb requires an embedded held-out dataset")
    real, synth, train_assign, centers, k = _ndb_clusters(inp, "ndb")
    held = inp.e_held_out.vectors
    train_counts = _cluster_counts(train_assign, k)
    held_counts = _cluster_counts(assign_to_centers(held, centers), k)
    synth_counts = _cluster_counts(assign_to_centers(synth, centers), k)
    held_diff, _ = _different_bins(train_counts, len(real), held_counts, len(held), k)
    synth_diff, _ = _different_bins(train_counts, len(real), synth_counts, len(synth), k)
    value = float(abs(int(held_diff.sum()) - int(synth_diff.sum())))
    return MeasureResult(value, {"different_vs_held_out": int(held_diff.sum()),
                                 "different_vs_synthetic": int(synth_diff.sum())})


def ndbou(inp: MeasureInput) -> MeasureResult:
    """(under-represented, over-represented) cluster counts as a pair."""
    real, synth, train_assign, centers, k = _ndb_clusters(inp, "ndbou")
    train_counts = _cluster_counts(train_assign, k)
    synth_counts = _cluster_counts(assign_to_centers(synth, centers), k)
    flags, signs = _different_bins(train_counts, len(real), synth_counts, len(synth), k)
    # train proportion above synthetic proportion means under-representation
    under = int(np.sum(flags & (signs > 0)))
    over = int(np.sum(flags & (signs < 0)))
    return MeasureResult((under, over), {"sum": under + over})


def c_t(inp: MeasureInput) -> MeasureResult:
    """Signed data-copying z: negative when synthetic sits closer to the
    training data than held-out data does.

    Cells come from k-means on the training embedding; per cell, a
    Mann-Whitney test compares held-out-to-train against synthetic-to-train
    nearest distances, aggregated by synthetic cell mass.
    """
    real, synth = inp.require_embedded("c_t")
    if inp.e_held_out is None:
        raise MeasureError("c_t requires an embedded held-out dataset")
    held = inp.e_held_out.vectors
    k = max(1, min(CT_MAX_CELLS, len(real) // CT_INSTANCES_PER_CELL))
    train_assign, centers = kmeans(real, k, inp.rng("c_t", "kmeans")) if k > 1 else (
        np.zeros(len(real), dtype=np.int64), real.mean(axis=0, keepdims=True))
    held_assign = assign_to_centers(held, centers)
    synth_assign = assign_to_centers(synth, centers)

    held_dists = pairwise_distances(held, real)
    synth_dists = pairwise_distances(synth, real)

    z_scores, weights = [], []
    for cell in range(k):
        train_members = np.flatnonzero(train_assign == cell)
        held_members = np.flatnonzero(held_assign == cell)
        synth_members = np.flatnonzero(synth_assign == cell)
        if len(train_members) == 0 or len(held_members) == 0 or len(synth_members) == 0:
            continue
        d_held = held_dists[np.ix_(held_members, train_members)].min(axis=1)
        d_synth = synth_dists[np.ix_(synth_members, train_members)].min(axis=1)
        z_scores.append(mann_whitney_z(d_synth, d_held))
        weights.append(len(synth_members))
    if not z_scores:
        raise MeasureError("C_T: Cell x is missing test or training samples")
    weights = np.asarray(weights, dtype=np.float64)
    weights /= weights.sum()
    value = float(np.dot(weights, z_scores))
    return MeasureResult(value, {"cells_used": len(z_scores), "abs_z": abs(value),
                                 "weights_sum": float(weights.sum())})


IMPLEMENTATIONS = {
    "ndb": ndb,
    "ndbou": ndbou,
    "c_t": c_t,
}

"""Embedder and scaling tests."""

import numpy as np
import pytest

from measurebench import embedding
from measurebench.data import generate_sine
from measurebench.datatypes import TimeSeriesDataset


def dataset_from(values):
    return TimeSeriesDataset(values=np.asarray(values, dtype=float))


class TestScaleUnit:
    def test_basic_channel(self):
        ds = dataset_from(np.array([0.0, 5.0, 10.0]).reshape(1, 3, 1))
        out = embedding.scale_unit(ds, ds)
        assert np.allclose(out.values[0, :, 0], [0.0, 0.5, 1.0])

    def test_constant_channel_maps_to_half(self):
        ds = dataset_from(np.full((2, 3, 1), 3.0))
        out = embedding.scale_unit(ds, ds)
        assert np.all(out.values == 0.5)

    def test_out_of_range_values_not_clipped(self):
        ref = dataset_from(np.array([0.0, 10.0, 5.0, 2.0]).reshape(2, 2, 1))
        probe = dataset_from(np.array([[-5.0], [15.0]]).reshape(1, 2, 1))
        out = embedding.scale_unit(probe, ref)
        # linear map check: x -> (x - 0) / 10
        assert out.values[0, 0, 0] == pytest.approx(-0.5)
        assert out.values[0, 1, 0] == pytest.approx(1.5)


class TestConcat:
    def test_channel_major_layout(self):
        # instance [[1, 3], [2, 4]]: channel 0 = [1, 2], channel 1 = [3, 4]
        ds = dataset_from(np.array([[[1.0, 3.0], [2.0, 4.0]]]))
        out = embedding.ConcatEmbedder().fit(ds).transform(ds)
        assert np.array_equal(out.vectors[0], [1.0, 2.0, 3.0, 4.0])

    def test_dimension_is_l_times_d(self):
        ds = generate_sine(n=12, l=20, d=3, seed=0)
        out = embedding.ConcatEmbedder().fit(ds).transform(ds)
        assert out.dim == 60

    def test_identical_instances_identical_rows(self):
        values = np.tile(np.arange(8.0).reshape(1, 4, 2), (3, 1, 1))
        ds = dataset_from(values)
        out = embedding.ConcatEmbedder().fit(ds).transform(ds)
        assert np.array_equal(out.vectors[0], out.vectors[1])

    def test_injective_on_distinct_instances(self):
        ds = generate_sine(n=30, l=16, d=2, seed=1)
        out = embedding.ConcatEmbedder().fit(ds).transform(ds)
        assert len(np.unique(out.vectors, axis=0)) == 30


class TestStatFeatures:
    def test_dimension_is_24_per_channel(self):
        ds = generate_sine(n=25, l=32, d=2, seed=2)
        emb = embedding.StatFeatureEmbedder().fit(ds)
        out = emb.transform(ds)
        assert out.dim == 24 * 2

    def test_constant_channel_variance_descriptors_zero(self):
        desc = embedding.channel_descriptors(np.full(32, 7.0))
        # std, skew, kurt, IQR, autocorrs, spectral, slope, changes, apen, mobility
        assert desc[1] == 0.0          # std
        assert desc[2] == 0.0          # skewness
        assert desc[3] == 0.0          # kurtosis
        assert desc[7] == 0.0          # IQR
        assert np.all(desc[10:13] == 0.0)  # lag autocorrelations
        assert desc[20] == 0.0         # std of differences
        assert desc[21] == 0.0         # approximate entropy
        assert desc[23] == 0.0         # Hjorth mobility
        assert desc[0] == 7.0          # mean passes through

    def test_permutation_equivariance(self):
        ds = generate_sine(n=20, l=24, d=1, seed=3)
        emb = embedding.StatFeatureEmbedder().fit(ds)
        base = emb.transform(ds).vectors
        perm = np.random.default_rng(0).permutation(20)
        shuffled = TimeSeriesDataset(values=ds.values[perm], labels=ds.labels[perm])
        out = emb.transform(shuffled).vectors
        assert np.allclose(out, base[perm])

    def test_row_multiset_invariant_under_shuffle(self):
        ds = generate_sine(n=20, l=24, d=2, seed=4)
        emb = embedding.StatFeatureEmbedder().fit(ds)
        a = emb.transform(ds).vectors
        perm = np.random.default_rng(1).permutation(20)
        b = emb.transform(TimeSeriesDataset(values=ds.values[perm],
                                            labels=ds.labels[perm])).vectors
        assert np.allclose(np.sort(a, axis=0), np.sort(b, axis=0))

    def test_standardization_uses_train_stats(self):
        train = generate_sine(n=40, l=24, d=1, seed=5)
        emb = embedding.StatFeatureEmbedder().fit(train)
        out = emb.transform(train).vectors
        active = embedding.raw_stat_features(train).std(axis=0) > 0
        assert np.allclose(out[:, active].mean(axis=0), 0.0, atol=1e-9)
        assert np.allclose(out[:, active].std(axis=0), 1.0, atol=1e-9)

    def test_too_short_series_rejected(self):
        ds = dataset_from(np.random.default_rng(0).standard_normal((4, 6, 1)))
        with pytest.raises(embedding.EmbeddingError):
            embedding.raw_stat_features(ds)

    def test_deterministic_and_seed_free(self):
        ds = generate_sine(n=15, l=24, d=2, seed=6)
        a = embedding.StatFeatureEmbedder().fit(ds).transform(ds).vectors
        b = embedding.StatFeatureEmbedder().fit(ds).transform(ds).vectors
        assert np.array_equal(a, b)


def test_make_embedder_rejects_unknown():
    with pytest.raises(embedding.EmbeddingError):
        embedding.make_embedder("ts2vec")

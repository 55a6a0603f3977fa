"""Measure tests: spec'd identities, brute-force oracles on toy fixtures,
range checks, and determinism."""

import math

import numpy as np
import pytest

from measurebench.data import SplitPolicy, generate_sine, split
from measurebench.datatypes import EmbeddedDataset, TimeSeriesDataset
from measurebench.embedding import ConcatEmbedder, StatFeatureEmbedder
from measurebench.kernels import dtw
from measurebench.measures import MeasureError, MeasureInput, implementation_for
from measurebench.measures.manifold import manifold_quadruple


def raw_input(train_values, synth_values, train_labels=None, synth_labels=None,
              held_values=None, held_labels=None, seed=0):
    held = None
    if held_values is not None:
        held = TimeSeriesDataset(values=held_values, labels=held_labels, name="h")
    return MeasureInput(
        d_train=TimeSeriesDataset(values=train_values, labels=train_labels, name="r"),
        d_synth=TimeSeriesDataset(values=synth_values, labels=synth_labels, name="s"),
        d_held_out=held,
        seed=seed,
    )


def embedded_input(real, synth, held=None, seed=0):
    real = np.asarray(real, dtype=float)
    synth = np.asarray(synth, dtype=float)
    dummy = TimeSeriesDataset(values=np.zeros((2, 2, 1)))
    return MeasureInput(
        d_train=dummy, d_synth=dummy,
        d_held_out=dummy if held is not None else None,
        e_train=EmbeddedDataset(real, "r", "concat"),
        e_synth=EmbeddedDataset(synth, "s", "concat"),
        e_held_out=EmbeddedDataset(np.asarray(held, dtype=float), "h", "concat")
        if held is not None else None,
        seed=seed,
    )


@pytest.fixture(scope="module")
def sine_three_way():
    ds = generate_sine(n=270, l=48, d=2, seed=29)
    return split(ds, SplitPolicy("three_way"), seed=29)


@pytest.fixture(scope="module")
def sine_embedded(sine_three_way):
    train, rs, held = sine_three_way
    emb = ConcatEmbedder().fit(train)
    return emb.transform(train).vectors, emb.transform(rs).vectors, emb.transform(held).vectors


class TestCosineFamily:
    def test_acs_identical_instance_sets(self):
        values = np.tile(np.sin(np.arange(16.0)).reshape(1, 16, 1), (6, 1, 1))
        out = implementation_for("acs")(raw_input(values, values.copy()))
        assert out.value == pytest.approx(1.0)

    def test_acs_within_class_pairing(self):
        rng = np.random.default_rng(0)
        base_a = rng.standard_normal((1, 16, 1))
        base_b = rng.standard_normal((1, 16, 1))
        values = np.concatenate([np.tile(base_a, (4, 1, 1)), np.tile(base_b, (4, 1, 1))])
        labels = np.array([0] * 4 + [1] * 4)
        out = implementation_for("acs")(
            raw_input(values, values.copy(), labels, labels.copy()))
        # within-class pairs are identical instances, so similarity is exactly 1
        assert out.value == pytest.approx(1.0)

    def test_max_rts_identical_pair(self):
        real = np.array([[1.0, 0.0], [0.0, 2.0]])
        synth = np.array([[0.5, -0.5], [2.0, 0.0]])  # parallel to real[0]
        out = implementation_for("max_rts")(embedded_input(real, synth))
        assert out.value == pytest.approx(1.0)

    def test_rts_exhaustive_enumeration(self):
        real = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
        synth = np.array([[1.0, 2.0], [2.0, 1.0], [1.0, -1.0]])
        out = implementation_for("rts")(embedded_input(real, synth, seed=5))
        def cos(a, b):
            return float(a @ b / (np.linalg.norm(a) * np.linalg.norm(b)))
        cross = np.mean([cos(x, y) for x in real for y in synth])
        within = np.mean([cos(real[i], real[j]) for i in range(3) for j in range(i + 1, 3)])
        assert out.value == pytest.approx(abs(cross - within), abs=1e-12)

    def test_sts_identical_instances(self):
        synth = np.tile(np.array([[1.0, 2.0, 3.0]]), (8, 1))
        out = implementation_for("sts")(embedded_input(synth.copy(), synth))
        assert out.value == pytest.approx(1.0)

    def test_zero_norm_vectors_skipped(self):
        real = np.array([[0.0, 0.0], [1.0, 0.0]])
        synth = np.array([[1.0, 0.0]])
        out = implementation_for("max_rts")(embedded_input(real, synth))
        assert out.value == pytest.approx(1.0)


class TestDtwFamily:
    def test_innd_zero_on_identical_subsample(self):
        ds = generate_sine(n=150, l=24, d=1, seed=30)  # n > subsample size
        out = implementation_for("innd")(raw_input(ds.values, ds.values.copy(), seed=3))
        assert out.value == 0.0

    def test_icd_zero_on_identical_instances(self):
        values = np.tile(np.sin(np.arange(20.0)).reshape(1, 20, 1), (5, 1, 1))
        out = implementation_for("icd")(raw_input(values, values.copy()))
        assert out.value == 0.0

    def test_family_matches_brute_force_on_toy_sets(self):
        rng = np.random.default_rng(31)
        real = rng.standard_normal((3, 6, 2))
        synth = rng.standard_normal((3, 6, 2))
        icd = implementation_for("icd")(raw_input(real, synth)).value
        innd = implementation_for("innd")(raw_input(real, synth)).value
        onnd = implementation_for("onnd")(raw_input(real, synth)).value
        d_ss = [[dtw(a, b) for b in synth] for a in synth]
        d_sr = [[dtw(a, b) for b in real] for a in synth]
        assert icd == pytest.approx(np.sum(d_ss) / 9.0, abs=1e-9)
        assert innd == pytest.approx(np.mean([min(row) for row in d_sr]), abs=1e-9)
        d_rs = [[dtw(a, b) for b in synth] for a in real]
        assert onnd == pytest.approx(np.mean([min(row) for row in d_rs]), abs=1e-9)


class TestApEn:
    def test_identical_zero(self):
        ds = generate_sine(n=30, l=32, d=2, seed=32)
        out = implementation_for("ap_en")(raw_input(ds.values, ds.values.copy()))
        assert out.value == 0.0

    def test_sine_vs_noise_positive(self):
        t = np.arange(64.0)
        sine = np.tile(np.sin(2 * np.pi * t / 16).reshape(1, 64, 1), (10, 1, 1))
        noise = np.random.default_rng(3).standard_normal((10, 64, 1))
        out = implementation_for("ap_en")(raw_input(sine, noise))
        assert out.value > 0.01

    def test_symmetry(self):
        a = generate_sine(n=20, l=32, d=1, seed=33).values
        b = np.random.default_rng(4).standard_normal((20, 32, 1))
        ab = implementation_for("ap_en")(raw_input(a, b)).value
        ba = implementation_for("ap_en")(raw_input(b, a)).value
        assert ab == pytest.approx(ba)


class TestCorrelationFamily:
    def test_identical_datasets_zero(self):
        ds = generate_sine(n=40, l=32, d=2, seed=34)
        for mid in ("auto_corr", "spatial", "temporal"):
            out = implementation_for(mid)(raw_input(ds.values, ds.values.copy()))
            assert out.value == pytest.approx(0.0, abs=1e-12), mid

    def test_spatial_correlated_vs_anticorrelated(self):
        rng = np.random.default_rng(35)
        base = rng.standard_normal((30, 40, 1))
        real = np.concatenate([base, base], axis=2)          # corr +1
        synth = np.concatenate([base, -base], axis=2)        # corr -1
        out = implementation_for("spatial")(raw_input(real, synth))
        assert out.value == pytest.approx(4.0, abs=1e-9)

    def test_spatial_univariate_fails(self):
        ds = generate_sine(n=10, l=16, d=1, seed=36)
        with pytest.raises(MeasureError):
            implementation_for("spatial")(raw_input(ds.values, ds.values))

    def test_fbca_hand_matrices(self):
        rng = np.random.default_rng(37)
        base = rng.standard_normal(200)
        real = np.column_stack([base, base + 1e-9 * rng.standard_normal(200)])
        synth = np.column_stack([base, -base])
        out = implementation_for("fbca")(embedded_input(real, synth))
        # real correlation ~ +1, synthetic ~ -1: mae 2, mse 4, frobenius sqrt(8)
        assert out.extras["mae"] == pytest.approx(2.0, abs=1e-6)
        assert out.extras["mse"] == pytest.approx(4.0, abs=1e-6)
        assert out.extras["frobenius"] == pytest.approx(math.sqrt(8.0), abs=1e-6)

    def test_fbca_identical_zero(self, sine_embedded):
        train, rs, _ = sine_embedded
        out = implementation_for("fbca")(embedded_input(train, train.copy()))
        assert out.value == pytest.approx(0.0, abs=1e-12)


class TestDistributionFamily:
    def test_identical_zero(self, sine_embedded):
        train, _, _ = sine_embedded
        for mid in ("jsd", "kld", "wd_on_pmf"):
            out = implementation_for(mid)(embedded_input(train, train.copy()))
            assert out.value == pytest.approx(0.0, abs=1e-8), mid

    def test_distributional_metric_identical_zero(self):
        ds = generate_sine(n=30, l=24, d=2, seed=38)
        out = implementation_for("distributional_metric")(
            raw_input(ds.values, ds.values.copy()))
        assert out.value == pytest.approx(0.0, abs=1e-12)

    def test_jsd_disjoint_supports(self):
        real = np.random.default_rng(5).random((50, 4))
        synth = real + 100.0
        out = implementation_for("jsd")(embedded_input(real, synth))
        assert out.value == pytest.approx(math.log(2), abs=1e-6)

    def test_wd_increases_with_shift(self, sine_embedded):
        train, _, _ = sine_embedded
        values = [implementation_for("wd_on_pmf")(
            embedded_input(train, train + shift)).value
            for shift in (0.0, 0.5, 1.0)]
        assert values[0] < values[1] < values[2]


class TestManifoldFamily:
    def test_identity_gives_ones(self, sine_embedded):
        train, _, _ = sine_embedded
        p, r, d, c = manifold_quadruple(train, train.copy())
        assert (p, r, c) == (1.0, 1.0, 1.0)
        # ties at the k-th neighbor distance can push density past 1 slightly
        assert d == pytest.approx(1.0, abs=0.02)

    def test_toy_single_synthetic_point(self):
        real = np.array([[0.0], [1.0]])
        synth = np.array([[0.1]])
        p, _, _, c = manifold_quadruple(real, synth, k=1, need_recall=False)
        assert p == 1.0
        assert c == 1.0

    def test_far_synthetic_gives_zeros(self, sine_embedded):
        train, _, _ = sine_embedded
        p, r, d, c = manifold_quadruple(train, train + 1e6)
        assert (p, c, d) == (0.0, 0.0, 0.0)

    def test_brute_force_randomized(self):
        rng = np.random.default_rng(39)
        for _ in range(20):
            n_r = int(rng.integers(4, 13))
            n_s = int(rng.integers(4, 13))
            k = int(rng.integers(1, 4))
            real = rng.standard_normal((n_r, 3))
            synth = rng.standard_normal((n_s, 3))
            if n_r <= k or n_s <= k:
                continue
            p, r, d, c = manifold_quadruple(real, synth, k=k)
            # brute-force ball membership
            def radius(pts, i, kk):
                dists = sorted(np.linalg.norm(pts[i] - pts[j])
                               for j in range(len(pts)) if j != i)
                return dists[kk - 1]
            rr = [radius(real, i, k) for i in range(n_r)]
            rs = [radius(synth, j, k) for j in range(n_s)]
            bp = np.mean([any(np.linalg.norm(y - real[i]) < rr[i] for i in range(n_r))
                          for y in synth])
            bc = np.mean([any(np.linalg.norm(real[i] - y) < rr[i] for y in synth)
                          for i in range(n_r)])
            bd = np.sum([[np.linalg.norm(y - real[i]) < rr[i] for y in synth]
                         for i in range(n_r)]) / (k * n_s)
            br = np.mean([any(np.linalg.norm(real[i] - synth[j]) < rs[j]
                              for j in range(n_s)) for i in range(n_r)])
            assert p == pytest.approx(bp, abs=1e-9)
            assert c == pytest.approx(bc, abs=1e-9)
            assert d == pytest.approx(bd, abs=1e-9)
            assert r == pytest.approx(br, abs=1e-9)

    def test_ranges(self, sine_embedded):
        train, rs, _ = sine_embedded
        p, r, d, c = manifold_quadruple(train, rs)
        for v in (p, r, c):
            assert 0.0 <= v <= 1.0
        assert d >= 0.0


class TestTypicalityFamily:
    def test_alpha_precision_identity(self, sine_embedded):
        train, _, _ = sine_embedded
        out = implementation_for("alpha_precision")(embedded_input(train, train.copy()))
        assert out.value == pytest.approx(1.0, abs=0.05)

    def test_beta_recall_identity(self, sine_embedded):
        train, _, _ = sine_embedded
        out = implementation_for("beta_recall")(embedded_input(train, train.copy()))
        assert out.value == pytest.approx(1.0, abs=0.05)

    def test_authenticity_zero_on_copies(self, sine_embedded):
        train, _, _ = sine_embedded
        out = implementation_for("authenticity")(embedded_input(train, train.copy()))
        assert out.value == 0.0

    def test_authenticity_near_zero_on_tiny_offsets(self, sine_embedded):
        train, _, _ = sine_embedded
        rng = np.random.default_rng(40)
        synth = train + 1e-9 * rng.standard_normal(train.shape)
        out = implementation_for("authenticity")(embedded_input(train, synth))
        # brute-force nearest-neighbor comparison oracle
        from measurebench.kernels import knn_radius, pairwise_distances
        self_d = knn_radius(train, 1)
        dist = pairwise_distances(synth, train)
        nearest = dist.argmin(axis=1)
        expected = float((self_d[nearest] < dist[np.arange(len(synth)), nearest]).mean())
        assert out.value == pytest.approx(expected)
        assert out.value < 0.05

    def test_small_sample_rejected(self):
        tiny = np.random.default_rng(0).standard_normal((10, 3))
        with pytest.raises(MeasureError):
            implementation_for("alpha_precision")(embedded_input(tiny, tiny))


class TestDetectionFamily:
    def test_same_distribution_auc_near_half(self):
        rng = np.random.default_rng(45)
        real = rng.standard_normal((200, 3))
        synth = rng.standard_normal((200, 3))
        for mid in ("detection_linear", "detection_gmm"):
            out = implementation_for(mid)(embedded_input(real, synth, seed=7))
            assert abs(out.extras["auc"] - 0.5) < 0.1, mid
            assert out.extras["distance_to_chance"] < 0.1, mid

    def test_shifted_distribution_detected(self, sine_embedded):
        train, rs, _ = sine_embedded
        shifted = rs + 10.0 * train.std()
        out = implementation_for("detection_linear")(embedded_input(train, shifted, seed=7))
        assert out.extras["auc"] > 0.95
        assert out.extras["distance_to_chance"] == pytest.approx(0.5, abs=0.05)

    def test_c2st_false_on_same_distribution(self, sine_embedded):
        train, rs, held = sine_embedded
        out = implementation_for("c2st")(embedded_input(train, rs, held=held, seed=8))
        assert out.value is False

    def test_c2st_true_on_shifted(self, sine_embedded):
        train, rs, held = sine_embedded
        shifted = rs + 10.0 * train.std()
        out = implementation_for("c2st")(embedded_input(train, shifted, held=held, seed=8))
        assert out.value is True

    def test_too_small_split_rejected(self):
        tiny = np.random.default_rng(0).standard_normal((8, 3))
        with pytest.raises(MeasureError):
            implementation_for("detection_linear")(embedded_input(tiny, tiny, seed=1))


class TestDownstreamFamily:
    def test_trts_zero_on_identical(self, sine_three_way):
        train, _, _ = sine_three_way
        out = implementation_for("trts")(raw_input(train.values, train.values.copy()))
        assert out.value == 0.0

    def test_tstr_zero_on_identical(self, sine_three_way):
        train, _, held = sine_three_way
        out = implementation_for("tstr")(
            raw_input(train.values, train.values.copy(), held_values=held.values))
        assert out.value == 0.0

    def test_trts_small_on_matched_split(self, sine_three_way):
        train, rs, _ = sine_three_way
        out = implementation_for("trts")(raw_input(train.values, rs.values))
        assert out.value < 0.05

    def test_predictive_exact_linear(self):
        t = np.arange(2000.0)
        series = (3.0 * t + 1.0).reshape(1, -1, 1)
        values = np.tile(series, (2, 1, 1))
        out = implementation_for("predictive")(raw_input(values, values.copy()))
        assert out.value < 1e-6

    def test_cas_identical_inputs(self, sine_three_way):
        train, _, held = sine_three_way
        out = implementation_for("cas")(raw_input(
            train.values, train.values.copy(), train.labels, train.labels.copy(),
            held_values=held.values, held_labels=held.labels))
        assert out.value == 0.0

    def test_cas_requires_labels(self, sine_three_way):
        train, rs, held = sine_three_way
        with pytest.raises(MeasureError):
            implementation_for("cas")(raw_input(
                train.values, rs.values, held_values=held.values))


class TestBinningFamily:
    def test_ndb_zero_when_synth_equals_held_out(self, sine_embedded):
        train, _, held = sine_embedded
        out = implementation_for("ndb")(embedded_input(train, held.copy(), held=held, seed=9))
        assert out.value == 0.0

    def test_ndb_nonnegative(self, sine_embedded):
        train, rs, held = sine_embedded
        out = implementation_for("ndb")(embedded_input(train, rs + 3.0, held=held, seed=9))
        assert out.value >= 0.0

    def test_ndbou_detects_missing_cluster(self):
        rng = np.random.default_rng(41)
        blobs = [rng.standard_normal((40, 2)) * 0.05 + center
                 for center in ([0, 0], [10, 0], [0, 10])]
        train = np.vstack(blobs)
        synth = np.vstack([blobs[0], blobs[1], blobs[1]])  # third blob missing
        out = implementation_for("ndbou")(embedded_input(train, synth, seed=10))
        under, over = out.value
        assert under >= 1
        assert out.extras["sum"] == under + over

    def test_ndbou_pair_zero_on_identity(self, sine_embedded):
        train, _, _ = sine_embedded
        out = implementation_for("ndbou")(embedded_input(train, train.copy(), seed=11))
        assert out.value == (0, 0)

    def test_ndb_too_few_instances(self):
        tiny = np.random.default_rng(0).standard_normal((30, 2))
        with pytest.raises(MeasureError):
            implementation_for("ndbou")(embedded_input(tiny, tiny, seed=1))


class TestDataCopying:
    def test_matched_split_small_z(self, sine_embedded):
        train, rs, held = sine_embedded
        out = implementation_for("c_t")(embedded_input(train, held.copy(), held=held, seed=12))
        assert abs(out.value) < 2.0
        assert out.extras["weights_sum"] == pytest.approx(1.0)

    def test_copies_give_strong_negative_z(self):
        rng = np.random.default_rng(42)
        train = rng.standard_normal((500, 4))
        held = rng.standard_normal((250, 4))
        out = implementation_for("c_t")(embedded_input(train, train.copy(), held=held, seed=13))
        assert out.value < -3.0


class TestContextFid:
    def test_identity_zero(self, sine_embedded):
        train, _, _ = sine_embedded
        out = implementation_for("context_fid")(embedded_input(train, train.copy()))
        assert out.value < 1e-8

    def test_1d_gaussians_closed_form(self):
        rng = np.random.default_rng(43)
        real = rng.standard_normal((10000, 1))
        synth = rng.standard_normal((10000, 1)) + 1.0
        out = implementation_for("context_fid")(embedded_input(real, synth))
        assert out.value == pytest.approx(1.0, abs=0.05)

    def test_rotation_invariance(self):
        rng = np.random.default_rng(44)
        real = rng.standard_normal((300, 4))
        synth = rng.standard_normal((300, 4)) + 0.3
        q, _ = np.linalg.qr(rng.standard_normal((4, 4)))
        base = implementation_for("context_fid")(embedded_input(real, synth)).value
        rotated = implementation_for("context_fid")(
            embedded_input(real @ q, synth @ q)).value
        assert rotated == pytest.approx(base, abs=1e-6)


class TestDeterminism:
    @pytest.mark.parametrize("mid", ["icd", "rts", "sts", "detection_linear",
                                     "detection_gmm", "ndbou"])
    def test_same_seed_same_value(self, mid, sine_embedded, sine_three_way):
        train_e, rs_e, held_e = sine_embedded
        train, rs, held = sine_three_way
        desc_embedded = mid not in ("icd",)
        if desc_embedded:
            inp1 = embedded_input(train_e, rs_e, held=held_e, seed=99)
            inp2 = embedded_input(train_e, rs_e, held=held_e, seed=99)
        else:
            inp1 = raw_input(train.values, rs.values, seed=99)
            inp2 = raw_input(train.values, rs.values, seed=99)
        a = implementation_for(mid)(inp1).value
        b = implementation_for(mid)(inp2).value
        assert a == b

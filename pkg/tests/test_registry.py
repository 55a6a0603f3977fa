"""Registry, expected-behavior table, and applicability tests."""

import json

import pytest

from measurebench.datatypes import (
    CATEGORIES,
    Category,
    Expectation,
    MeasureDescriptor,
    Orientation,
    ScoreKind,
    TestSpec,
)
from measurebench.registry import (
    ExpectedBehaviorTable,
    DatasetTraits,
    MeasureRegistry,
    RegistryError,
    applicable,
    build_measure_registry,
    build_transform_registry,
    canonical_transform_id,
)


@pytest.fixture(scope="module")
def measures():
    return build_measure_registry()


@pytest.fixture(scope="module")
def transforms():
    return build_transform_registry()


class TestMeasureRegistry:
    def test_register_and_lookup(self):
        reg = MeasureRegistry()
        desc = MeasureDescriptor(id="icd", score_kind=ScoreKind.REAL,
                                 orientation=Orientation.lower())
        reg.register(desc, lambda inp: None)
        assert reg.descriptor("icd").orientation.kind.value == "lower_better"

    def test_boolean_measure_registration(self):
        reg = MeasureRegistry()
        desc = MeasureDescriptor(id="c2st", score_kind=ScoreKind.BOOLEAN,
                                 orientation=Orientation.lower())
        reg.register(desc, lambda inp: None)
        assert reg.descriptor("c2st").score_kind == ScoreKind.BOOLEAN

    def test_duplicate_id_rejected(self):
        reg = MeasureRegistry()
        desc = MeasureDescriptor(id="x", score_kind=ScoreKind.REAL,
                                 orientation=Orientation.higher())
        reg.register(desc, lambda inp: None)
        with pytest.raises(RegistryError):
            reg.register(desc, lambda inp: None)

    def test_unknown_id_raises(self, measures):
        with pytest.raises(RegistryError):
            measures.descriptor("definitely_not_a_measure")

    def test_all_34_measures_present(self, measures):
        assert len(measures.ids()) == 34

    def test_catalog_dump(self, measures, tmp_path):
        path = tmp_path / "measures.json"
        measures.dump_catalog(path)
        catalog = json.loads(path.read_text())
        assert len(catalog["measures"]) == 34
        by_id = {entry["id"]: entry for entry in catalog["measures"]}
        assert by_id["c2st"]["score_kind"] == "boolean"
        assert by_id["ndbou"]["score_kind"] == "pair"
        assert by_id["detection_linear"]["orientation"] == "target_value"
        assert by_id["detection_linear"]["orientation_target"] == 0.5

    def test_score_kind_drives_formula_choice(self, measures):
        # every boolean-scored measure routes to the boolean formulas
        from measurebench.evaluation import trajectory_reliability
        for mid in measures.ids():
            desc = measures.descriptor(mid)
            if desc.score_kind == ScoreKind.BOOLEAN:
                scores = [False, True]
            elif desc.score_kind == ScoreKind.PAIR:
                scores = [(0, 0), (1, 2)]
            else:
                scores = [0.0, 1.0]
            value = trajectory_reliability(desc, scores, Expectation.WORSEN)
            assert 0.0 <= value <= 1.0


class TestExpectedBehavior:
    def test_all_13x4_cells_present(self):
        table = ExpectedBehaviorTable()
        assert len(table.transform_ids()) == 13
        for tid in table.transform_ids():
            for cat in CATEGORIES:
                assert table.expectation(tid, cat) is not None

    def test_known_cells(self):
        table = ExpectedBehaviorTable()
        assert table.expectation("gaussian_noise", Category.FIDELITY) == Expectation.WORSEN
        assert table.expectation("gaussian_noise", Category.PRIVACY) == Expectation.IMPROVE
        assert table.expectation("label_corruption", Category.PRIVACY) == Expectation.NOT_APPLICABLE
        assert table.expectation("mode_collapse", Category.FIDELITY) == Expectation.CONSTANT
        assert table.expectation("reverse_substitution", Category.PRIVACY) == Expectation.WORSEN
        assert table.expectation("substitution", Category.REPRESENTATIVENESS) == Expectation.CONSTANT
        assert table.expectation("segment_leaking", Category.GENERALIZATION) == Expectation.WORSEN

    def test_round_trip(self):
        table = ExpectedBehaviorTable()
        clone = ExpectedBehaviorTable.from_dict(
            json.loads(json.dumps(table.to_dict()))
        )
        for tid in table.transform_ids():
            for cat in CATEGORIES:
                assert clone.expectation(tid, cat) == table.expectation(tid, cat)

    def test_chain_uses_last_non_shuffle(self):
        table = ExpectedBehaviorTable()
        assert (table.expectation_for_chain(("shuffle", "gn_moderate"), Category.FIDELITY)
                == Expectation.WORSEN)
        assert (table.expectation_for_chain(("shuffle",), Category.FIDELITY)
                == Expectation.CONSTANT)

    def test_alias_resolution(self):
        assert canonical_transform_id("gn_moderate") == "gaussian_noise"
        assert canonical_transform_id("corrupt_labels") == "label_corruption"
        assert canonical_transform_id("misalignment") == "misalignment"


def make_spec(measure="icd", chain=("gaussian_noise",), embedder=None):
    return TestSpec(dataset="d", transformation_chain=chain, measure=measure,
                    embedder=embedder, seed=1)


def traits(**kwargs):
    defaults = dict(name="d", has_labels=True, channels=2, length=64,
                    n_classes=3, has_substitute=True, has_held_out=True)
    defaults.update(kwargs)
    return DatasetTraits(**defaults)


class TestApplicability:
    def test_misalignment_univariate(self, measures, transforms):
        ok, reason = applicable(make_spec(chain=("misalignment",)),
                                traits(channels=1), measures, transforms)
        assert not ok and "d>1" in reason

    def test_gaussian_noise_unconstrained(self, measures, transforms):
        ok, _ = applicable(make_spec(), traits(has_labels=False), measures, transforms)
        assert ok

    def test_mode_dropping_unlabeled(self, measures, transforms):
        ok, reason = applicable(make_spec(chain=("mode_dropping",)),
                                traits(has_labels=False), measures, transforms)
        assert not ok and "labeled" in reason

    def test_held_out_requirement(self, measures, transforms):
        ok, reason = applicable(make_spec(measure="ndb", embedder="concat"),
                                traits(has_held_out=False), measures, transforms)
        assert not ok and "held-out" in reason

    def test_label_only_transform_needs_label_aware_measure(self, measures, transforms):
        ok, reason = applicable(make_spec(measure="icd", chain=("corrupt_labels",)),
                                traits(), measures, transforms)
        assert not ok and "ignores labels" in reason
        ok, _ = applicable(make_spec(measure="cas", chain=("corrupt_labels",)),
                           traits(), measures, transforms)
        assert ok

    def test_unknown_ids_raise(self, measures, transforms):
        with pytest.raises(RegistryError):
            applicable(make_spec(measure="nope"), traits(), measures, transforms)
        with pytest.raises(RegistryError):
            applicable(make_spec(chain=("nope",)), traits(), measures, transforms)


class TestOrientation:
    def test_canonical_real(self):
        assert Orientation.higher().canonical(2.0) == 2.0
        assert Orientation.lower().canonical(2.0) == -2.0
        assert Orientation.target_value(0.5).canonical(0.9) == pytest.approx(-0.4)
        assert Orientation.target_value(0.5).canonical(0.5) == 0.0

    def test_canonical_bool(self):
        assert Orientation.higher().canonical_bool(True) is True
        assert Orientation.lower().canonical_bool(True) is False


class TestSpecValidation:
    def test_default_grid_has_11_steps(self):
        spec = make_spec()
        assert len(spec.kappa_grid) == 11
        assert spec.kappa_grid[0] == 0.0
        assert spec.kappa_grid[-1] == 1.0

    def test_grid_must_start_at_zero(self):
        with pytest.raises(ValueError):
            TestSpec(dataset="d", transformation_chain=("gaussian_noise",),
                     measure="icd", embedder=None, seed=1,
                     kappa_grid=(0.1, 0.5, 1.0))

    def test_grid_strictly_increasing(self):
        with pytest.raises(ValueError):
            TestSpec(dataset="d", transformation_chain=("gaussian_noise",),
                     measure="icd", embedder=None, seed=1,
                     kappa_grid=(0.0, 0.5, 0.5))

    def test_chain_depth_capped(self):
        with pytest.raises(ValueError):
            TestSpec(dataset="d", transformation_chain=("a", "b", "c"),
                     measure="icd", embedder=None, seed=1)

    def test_test_id_stable(self):
        assert make_spec().test_id() == make_spec().test_id()
        assert make_spec().test_id() != make_spec(measure="jsd").test_id()

    def test_round_trip(self):
        spec = make_spec(measure="jsd", embedder="concat")
        clone = TestSpec.from_dict(json.loads(json.dumps(spec.to_dict())))
        assert clone == spec

"""Measure and transformation registries plus the expected-behavior table.

Registries are populated once at experiment initialization and treated as
immutable afterwards, so they can be read concurrently from any worker.
"""

from __future__ import annotations

import json
from typing import Callable, Dict, Optional, Tuple

from .datatypes import (
    CATEGORIES,
    Category,
    Expectation,
    MeasureDescriptor,
    Orientation,
    ScoreKind,
    TestSpec,
    TransformDescriptor,
)


class RegistryError(ValueError):
    """Duplicate or unknown registry id."""


class MeasureRegistry:
    def __init__(self):
        self._descriptors: Dict[str, MeasureDescriptor] = {}
        self._impls: Dict[str, Callable] = {}

    def register(self, descriptor: MeasureDescriptor, impl: Callable) -> MeasureDescriptor:
        if descriptor.id in self._descriptors:
            raise RegistryError(f"duplicate measure id {descriptor.id!r}")
        self._descriptors[descriptor.id] = descriptor
        self._impls[descriptor.id] = impl
        return descriptor

    def descriptor(self, measure_id: str) -> MeasureDescriptor:
        try:
            return self._descriptors[measure_id]
        except KeyError:
            raise RegistryError(f"unknown measure id {measure_id!r}") from None

    def impl(self, measure_id: str) -> Callable:
        self.descriptor(measure_id)
        return self._impls[measure_id]

    def ids(self) -> Tuple[str, ...]:
        return tuple(self._descriptors)

    def __contains__(self, measure_id: str) -> bool:
        return measure_id in self._descriptors

    def to_catalog(self) -> dict:
        return {"measures": [d.to_dict() for d in self._descriptors.values()]}

    def dump_catalog(self, path) -> None:
        """Write the registry contents as a JSON catalog (measures.json)."""
        with open(path, "w") as fh:
            json.dump(self.to_catalog(), fh, indent=2, sort_keys=True)
            fh.write("\n")


class TransformRegistry:
    def __init__(self):
        self._descriptors: Dict[str, TransformDescriptor] = {}
        self._impls: Dict[str, Callable] = {}

    def register(self, descriptor: TransformDescriptor, impl: Callable) -> TransformDescriptor:
        if descriptor.id in self._descriptors:
            raise RegistryError(f"duplicate transformation id {descriptor.id!r}")
        self._descriptors[descriptor.id] = descriptor
        self._impls[descriptor.id] = impl
        return descriptor

    def descriptor(self, transform_id: str) -> TransformDescriptor:
        try:
            return self._descriptors[transform_id]
        except KeyError:
            raise RegistryError(f"unknown transformation id {transform_id!r}") from None

    def impl(self, transform_id: str) -> Callable:
        self.descriptor(transform_id)
        return self._impls[transform_id]

    def ids(self) -> Tuple[str, ...]:
        return tuple(self._descriptors)

    def __contains__(self, transform_id: str) -> bool:
        return transform_id in self._descriptors


# Config-facing aliases: the historical config names map onto internal ids.
TRANSFORM_ALIASES = {
    "gn_moderate": "gaussian_noise",
    "salt_and_peper_noise": "salt_and_pepper",
    "reverse_sub_clean": "reverse_substitution",
    "corrupt_labels": "label_corruption",
    "stl_decomposition": "stl_transform",
}

# Measures recognized from older configs but deliberately not shipped here.
UNSUPPORTED_MEASURES = {
    "discriminative": "needs the original RNN discriminator",
    "detection_mlp": "needs a trained MLP discriminator",
    "detection_xgb": "needs the XGBoost discriminator",
    "domias": "needs a BNAF density estimator",
    "sig_mmd": "needs signature kernels",
    "m_top_div": "needs persistent homology machinery",
    "wcs": "needs wavelet coherence analysis",
}

UNSUPPORTED_EMBEDDERS = {
    "ts2vec": "trained representation models are not shipped; "
              "use 'concat' or 'statfeat' instead",
}


def canonical_transform_id(name: str) -> str:
    return TRANSFORM_ALIASES.get(name, name)


# ---------------------------------------------------------------------------
# Expected behavior per (transformation, category)

_I, _W, _C, _NA = (
    Expectation.IMPROVE,
    Expectation.WORSEN,
    Expectation.CONSTANT,
    Expectation.NOT_APPLICABLE,
)

# Rows are (fidelity, generalization, privacy, representativeness).
_EXPECTED_ROWS = {
    "label_corruption":     (_W, _C, _NA, _W),
    "gaussian_noise":       (_W, _I, _I, _W),
    "misalignment":         (_W, _C, _I, _W),
    "mode_dropping":        (_C, _C, _I, _W),
    "mode_collapse":        (_C, _C, _I, _W),
    "moving_average":       (_W, _I, _I, _W),
    "rare_event_drop":      (_C, _C, _I, _W),
    "reverse_substitution": (_C, _W, _W, _C),
    "salt_and_pepper":      (_W, _I, _I, _W),
    "segment_leaking":      (_W, _W, _W, _W),
    "stl_transform":        (_W, _I, _I, _W),
    "substitution":         (_C, _I, _I, _C),
    "wavelet_transform":    (_W, _I, _I, _W),
}


class ExpectedBehaviorTable:
    """Maps (transformation id, category) to the a-priori score expectation."""

    def __init__(self, rows: Optional[dict] = None):
        rows = rows if rows is not None else _EXPECTED_ROWS
        self._table: Dict[Tuple[str, Category], Expectation] = {}
        for tid, cells in rows.items():
            for cat, cell in zip(CATEGORIES, cells):
                self._table[(tid, cat)] = Expectation(cell)

    def expectation(self, transform_id: str, category: Category) -> Expectation:
        key = (canonical_transform_id(transform_id), Category(category))
        try:
            return self._table[key]
        except KeyError:
            raise RegistryError(f"no expected behavior for {key}") from None

    def expectation_for_chain(self, chain, category: Category) -> Expectation:
        """Chains delegate to their last non-shuffle element."""
        effective = [t for t in chain if canonical_transform_id(t) != "shuffle"]
        if not effective:
            return Expectation.CONSTANT  # pure shuffle leaves the multiset intact
        return self.expectation(effective[-1], category)

    def transform_ids(self) -> Tuple[str, ...]:
        return tuple(sorted({tid for tid, _ in self._table}))

    def to_dict(self) -> dict:
        return {
            tid: {cat.value: self._table[(tid, cat)].value for cat in CATEGORIES}
            for tid in self.transform_ids()
        }

    @staticmethod
    def from_dict(data: dict) -> "ExpectedBehaviorTable":
        rows = {
            tid: tuple(Expectation(cells[cat.value]) for cat in CATEGORIES)
            for tid, cells in data.items()
        }
        return ExpectedBehaviorTable(rows)


# ---------------------------------------------------------------------------
# Applicability

class DatasetTraits:
    """The dataset facts applicability decisions need."""

    def __init__(self, name: str, has_labels: bool, channels: int, length: int,
                 n_classes: int = 0, has_substitute: bool = True,
                 has_held_out: bool = False):
        self.name = name
        self.has_labels = has_labels
        self.channels = channels
        self.length = length
        self.n_classes = n_classes
        self.has_substitute = has_substitute
        self.has_held_out = has_held_out


def applicable(spec: TestSpec, traits: DatasetTraits, measures: MeasureRegistry,
               transforms: TransformRegistry) -> Tuple[bool, str]:
    """Decide whether a test can run on its dataset; returns (ok, reason).

    Unknown ids raise; they are a configuration error, not a skip.
    """
    mdesc = measures.descriptor(spec.measure)
    chain_descs = [transforms.descriptor(canonical_transform_id(t))
                   for t in spec.transformation_chain]
    label_targeted_only = all(d.label_targeted or d.id == "shuffle" for d in chain_descs)

    for tdesc in chain_descs:
        if tdesc.needs_labels and not traits.has_labels:
            return False, f"{tdesc.id} requires labeled data"
        if tdesc.needs_multivariate and traits.channels < 2:
            return False, f"{tdesc.id} requires d>1"
        if tdesc.needs_substitute and not traits.has_substitute:
            return False, f"{tdesc.id} requires a substitute split"
        if traits.length < tdesc.min_length:
            return False, f"{tdesc.id} requires l>={tdesc.min_length}"
    if mdesc.needs_labels and not traits.has_labels:
        return False, f"{mdesc.id} requires labeled data"
    if mdesc.needs_held_out and not traits.has_held_out:
        return False, f"{mdesc.id} requires a held-out split"
    if label_targeted_only and not mdesc.label_aware:
        # a labels-only perturbation is invisible to label-blind measures
        return False, f"{mdesc.id} ignores labels; label-only transformation"
    return True, ""


# ---------------------------------------------------------------------------
# Default registry contents

def _measure_descriptors() -> Tuple[MeasureDescriptor, ...]:
    higher = Orientation.higher()
    lower = Orientation.lower()

    def m(id, *, kind=ScoreKind.REAL, orientation=lower, embedding=False,
          scaling=False, labels=False, held_out=False, label_aware=False,
          variant_of=None):
        return MeasureDescriptor(
            id=id, score_kind=kind, orientation=orientation,
            needs_embedding=embedding, needs_scaling=scaling,
            needs_labels=labels, needs_held_out=held_out,
            label_aware=label_aware, variant_of=variant_of,
        )

    return (
        # cosine similarity family
        m("acs", orientation=higher, label_aware=True),
        m("max_rts", orientation=higher, embedding=True),
        m("rts", orientation=higher, embedding=True),
        m("sts", orientation=higher, embedding=True),
        # DTW family (values compared on the unit scale)
        m("icd", scaling=True),
        m("innd", scaling=True),
        m("onnd", scaling=True),
        # regularity
        m("ap_en"),
        # correlation family
        m("auto_corr"),
        m("spatial"),
        m("temporal"),
        m("fbca", embedding=True),
        # distribution family
        m("jsd", embedding=True),
        m("kld", embedding=True),
        m("wd_on_pmf", embedding=True),
        m("distributional_metric", scaling=True),
        # manifold family
        m("improved_precision", orientation=higher, embedding=True),
        m("improved_recall", orientation=higher, embedding=True),
        m("Density", orientation=higher, embedding=True),
        m("Coverage", orientation=higher, embedding=True),
        # typicality family
        m("alpha_precision", orientation=higher, embedding=True),
        m("beta_recall", orientation=higher, embedding=True),
        m("authenticity", orientation=higher, embedding=True),
        # detection family (AUC targets 0.5; classifiers are shallow stand-ins)
        m("detection_linear", orientation=Orientation.target_value(0.5),
          embedding=True, variant_of="detection (original used richer models)"),
        m("detection_gmm", orientation=Orientation.target_value(0.5), embedding=True),
        m("c2st", kind=ScoreKind.BOOLEAN, orientation=lower, embedding=True,
          held_out=True, variant_of="c2st (original used a deep classifier)"),
        # downstream family (ridge forecaster replaces the original RNN)
        m("predictive", scaling=True, variant_of="predictive score (RNN original)"),
        m("tstr", scaling=True, held_out=True, variant_of="tstr (RNN original)"),
        m("trts", scaling=True, variant_of="trts (RNN original)"),
        m("cas", scaling=True, labels=True, held_out=True, label_aware=True,
          variant_of="cas (deep classifier original)"),
        # cluster binning family
        m("ndb", embedding=True, held_out=True),
        m("ndbou", kind=ScoreKind.PAIR, embedding=True),
        # data copying (signed z; 0 is the ideal value)
        m("c_t", orientation=Orientation.target_value(0.0), embedding=True,
          held_out=True),
        # Gaussian embedding distance
        m("context_fid", embedding=True),
    )


def _transform_descriptors() -> Tuple[TransformDescriptor, ...]:
    t = TransformDescriptor
    return (
        t("shuffle"),
        t("gaussian_noise"),
        t("label_corruption", needs_labels=True, label_targeted=True),
        t("misalignment", needs_multivariate=True),
        t("mode_collapse", needs_labels=True),
        t("mode_dropping", needs_labels=True),
        t("moving_average"),
        t("rare_event_drop", needs_labels=True, needs_substitute=True),
        t("reverse_substitution", needs_substitute=True),
        t("salt_and_pepper"),
        t("segment_leaking", needs_substitute=True, min_length=8),
        t("stl_transform", min_length=4),
        t("substitution", needs_substitute=True),
        t("wavelet_transform", min_length=4),
    )


def build_measure_registry() -> MeasureRegistry:
    """Registry with all shipped measures wired to their implementations."""
    from . import measures as measure_impls

    registry = MeasureRegistry()
    for desc in _measure_descriptors():
        registry.register(desc, measure_impls.implementation_for(desc.id))
    return registry


def build_transform_registry() -> TransformRegistry:
    from . import transforms as transform_impls

    registry = TransformRegistry()
    for desc in _transform_descriptors():
        registry.register(desc, transform_impls.implementation_for(desc.id))
    return registry

"""The quality measures, grouped by shared machinery.

Each measure consumes a :class:`MeasureInput` of prepared datasets (scaled
and/or embedded per its descriptor) and returns a :class:`MeasureResult`.
All measures are deterministic given the input seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, Optional

import numpy as np

from ..datatypes import EmbeddedDataset, TimeSeriesDataset, derive_rng


class MeasureError(RuntimeError):
    """A measure-specific failure; recorded verbatim as the test failure."""


@dataclass
class MeasureInput:
    """Prepared inputs of one measure invocation at one modulation step."""

    d_train: TimeSeriesDataset
    d_synth: TimeSeriesDataset
    d_held_out: Optional[TimeSeriesDataset] = None
    e_train: Optional[EmbeddedDataset] = None
    e_synth: Optional[EmbeddedDataset] = None
    e_held_out: Optional[EmbeddedDataset] = None
    seed: int = 0

    def require_embedded(self, measure_id: str):
        if self.e_train is None or self.e_synth is None:
            raise MeasureError(f"{measure_id} requires embedded inputs")
        return self.e_train.vectors, self.e_synth.vectors

    def require_held_out(self, measure_id: str) -> TimeSeriesDataset:
        if self.d_held_out is None:
            raise MeasureError(f"{measure_id} requires a held-out dataset")
        return self.d_held_out

    def rng(self, measure_id: str, *tags) -> np.random.Generator:
        return derive_rng(self.seed, measure_id, *tags)


@dataclass
class MeasureResult:
    value: object  # float, bool, or (under, over) pair
    extras: dict = field(default_factory=dict)


SUBSAMPLE_SIZE = 100


def subsample_indices(seed: int, measure_id: str, population: int,
                      size: int = SUBSAMPLE_SIZE) -> np.ndarray:
    """Seeded subsample; equal populations draw identical index sets."""
    if population <= size:
        return np.arange(population)
    rng = derive_rng(seed, measure_id, "subsample", population)
    return np.sort(rng.choice(population, size=size, replace=False))


def implementation_for(measure_id: str) -> Callable[[MeasureInput], MeasureResult]:
    return _implementations()[measure_id]


_IMPL_CACHE: Dict[str, Callable] = {}


def _implementations() -> Dict[str, Callable]:
    if _IMPL_CACHE:
        return _IMPL_CACHE
    from . import clustering, distances, distributions, manifold, models, similarity

    for module in (similarity, distances, distributions, manifold, models, clustering):
        _IMPL_CACHE.update(module.IMPLEMENTATIONS)
    return _IMPL_CACHE

"""Benchmark framework that scores the evaluators of synthetic time series.

Real datasets are perturbed along a controlled intensity path; a catalog of
quality measures runs on every step; reliability, consistency, and runtime
indicators are computed per measure and quality category.
"""

from .datatypes import (
    Category,
    EmbeddedDataset,
    Expectation,
    MeasureDescriptor,
    Orientation,
    ScoreTrajectory,
    TestSpec,
    TestStatus,
    TimeSeriesDataset,
)
from .registry import (
    ExpectedBehaviorTable,
    applicable,
    build_measure_registry,
    build_transform_registry,
)

__version__ = "0.1.0"

__all__ = [
    "Category",
    "EmbeddedDataset",
    "Expectation",
    "ExpectedBehaviorTable",
    "MeasureDescriptor",
    "Orientation",
    "ScoreTrajectory",
    "TestSpec",
    "TestStatus",
    "TimeSeriesDataset",
    "applicable",
    "build_measure_registry",
    "build_transform_registry",
    "__version__",
]

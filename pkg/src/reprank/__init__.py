"""Reputation-weighted ranking of objects in bipartite user/object rating systems."""

from reprank.rating_core import (
    DegenerateError,
    DuplicateRatingError,
    RatingError,
    RatingRangeError,
    RatingScale,
    RatingTable,
)
from reprank.engines import Algorithm, EngineConfig, RankResult, run
from reprank.synthetic import GeneratorConfig, GroundTruth, Label, SpamConfig, SpamKind, generate
from reprank.metrics import auc, kendall_tau, top_fraction_benchmark

__all__ = [
    "Algorithm",
    "DegenerateError",
    "DuplicateRatingError",
    "EngineConfig",
    "GeneratorConfig",
    "GroundTruth",
    "Label",
    "RankResult",
    "RatingError",
    "RatingRangeError",
    "RatingScale",
    "RatingTable",
    "SpamConfig",
    "SpamKind",
    "auc",
    "generate",
    "kendall_tau",
    "run",
    "top_fraction_benchmark",
]

__version__ = "0.1.0"

"""Binomial proportion intervals compared by the expected interval score."""

__version__ = "0.1.0"

from .asymptotics import asym_eis, asym_ew, asym_ewis
from .evaluation import (
    LevelWeights,
    coverage_probability,
    expected_interval_score,
    expected_width,
    expected_wis,
    interval_score,
    smoothed_cp,
)
from .intervals import BinomialSetting, IntervalEstimate, MethodId, compute_interval
from .summaries import rank_methods, ranking_grid

__all__ = [
    "BinomialSetting",
    "IntervalEstimate",
    "LevelWeights",
    "MethodId",
    "asym_eis",
    "asym_ew",
    "asym_ewis",
    "compute_interval",
    "coverage_probability",
    "expected_interval_score",
    "expected_width",
    "expected_wis",
    "interval_score",
    "rank_methods",
    "ranking_grid",
    "smoothed_cp",
]

"""Exact frequentist evaluation of interval methods by enumerating x = 0..n.

All ``pi`` arguments accept a scalar or an array; scalars give back floats.
Evaluation always uses the truncated limits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .asymptotics import asym_eis
from .intervals import BinomialSetting, all_endpoints, interval_table
from .numerics import QuadratureSpec, binom_pmf_matrix, integrate_piecewise

__all__ = [
    "EvaluationPoint",
    "LevelWeights",
    "coverage",
    "coverage_probability",
    "evaluate_point",
    "expected_interval_score",
    "expected_width",
    "expected_wis",
    "interval_score",
    "smoothed_cp",
    "weighted_interval_score",
]

DEFAULT_EPSILON = 0.025

# Interval limits carry rounding error near 1e-15, so a pi this close to a
# limit is treated as lying on it: covered (closed interval) and unpenalized.
# This keeps coverage symmetric at analytic ties such as the n = 1
# Clopper-Pearson limits alpha/2 and 1 - alpha/2.
LIMIT_TOL = 1e-14


@dataclass(frozen=True)
class LevelWeights:
    """Confidence levels with nonnegative weights for the weighted interval score."""

    levels: tuple[tuple[float, float], ...]

    def __post_init__(self):
        levels = tuple((float(g), float(w)) for g, w in self.levels)
        if not levels:
            raise ValueError("need at least one level")
        gammas = [g for g, _ in levels]
        if len(set(gammas)) != len(gammas):
            raise ValueError("levels must be distinct")
        for g, w in levels:
            if not (0.0 < g < 1.0):
                raise ValueError(f"level {g} outside (0, 1)")
            if not (w >= 0.0 and math.isfinite(w)):
                raise ValueError(f"weight {w} must be finite and >= 0")
        if not any(w > 0.0 for _, w in levels):
            raise ValueError("at least one weight must be positive")
        object.__setattr__(self, "levels", levels)

    @classmethod
    def from_lists(cls, gammas: Sequence[float], weights: Sequence[float] | None = None):
        if weights is None:
            weights = [1.0] * len(gammas)
        if len(weights) != len(gammas):
            raise ValueError("levels and weights differ in length")
        return cls(tuple(zip(gammas, weights)))

    @property
    def gammas(self) -> tuple[float, ...]:
        return tuple(g for g, _ in self.levels)

    def label(self) -> str:
        return ";".join(f"{g:g}:{w:g}" for g, w in self.levels)


@dataclass(frozen=True)
class EvaluationPoint:
    pi: float
    cp: float
    ew: float
    eis: float
    smoothed_cp: float | None = None
    eis_deficit: float | None = None


def _scalar_or_array(values: np.ndarray, pi):
    return float(values[0]) if np.ndim(pi) == 0 else values


# --------------------------------------------------------------------------
# Single interval
# --------------------------------------------------------------------------


def _excess(a, b):
    """``a - b`` where it exceeds LIMIT_TOL, else 0."""
    d = a - b
    return np.where(d > LIMIT_TOL, d, 0.0)


def _covers(l, u, pi):
    return (l - pi <= LIMIT_TOL) & (pi - u <= LIMIT_TOL)


def coverage(l: float, u: float, pi: float) -> int:
    """1 when ``pi`` lies in the closed interval ``[l, u]``."""
    return int(_covers(l, u, pi))


def interval_score(l, u, pi, alpha: float):
    """Interval score: width plus ``2/alpha`` times the distance of a missed ``pi``."""
    if not (0.0 < alpha < 1.0):
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    l, u, pi = np.asarray(l, float), np.asarray(u, float), np.asarray(pi, float)
    k = 2.0 / alpha
    score = (u - l) + k * _excess(l, pi) + k * _excess(pi, u)
    return float(score) if np.ndim(score) == 0 else score


def weighted_interval_score(intervals, pi: float, weights: LevelWeights) -> float:
    """Weighted sum of interval scores, one ``(lower, upper)`` pair per level."""
    if len(intervals) != len(weights.levels):
        raise ValueError("need exactly one interval per level")
    total = 0.0
    for (l, u), (g, w) in zip(intervals, weights.levels):
        total += w * interval_score(l, u, pi, 1.0 - g)
    return total


# --------------------------------------------------------------------------
# Expectations over X ~ Binomial(n, pi)
# --------------------------------------------------------------------------


def _pmf(setting: BinomialSetting, pi) -> np.ndarray:
    return binom_pmf_matrix(setting.n, pi)


def coverage_probability(method, setting: BinomialSetting, pi):
    lower, upper = interval_table(method, setting)
    p = np.atleast_1d(np.asarray(pi, float))
    covered = _covers(lower[None, :], upper[None, :], p[:, None])
    values = np.sum(_pmf(setting, p) * covered, axis=1)
    return _scalar_or_array(values, pi)


def expected_width(method, setting: BinomialSetting, pi):
    lower, upper = interval_table(method, setting)
    p = np.atleast_1d(np.asarray(pi, float))
    # same reduction as the score so EIS == EW bit-for-bit under full coverage
    values = np.sum(_pmf(setting, p) * (upper - lower)[None, :], axis=1)
    return _scalar_or_array(values, pi)


def _eis_matrix(lower, upper, p, alpha):
    k = 2.0 / alpha
    return (
        (upper - lower)[None, :]
        + k * _excess(lower[None, :], p[:, None])
        + k * _excess(p[:, None], upper[None, :])
    )


def expected_interval_score(method, setting: BinomialSetting, pi):
    lower, upper = interval_table(method, setting)
    p = np.atleast_1d(np.asarray(pi, float))
    scores = _eis_matrix(lower, upper, p, setting.alpha)
    values = np.sum(_pmf(setting, p) * scores, axis=1)
    return _scalar_or_array(values, pi)


def expected_wis(method, n: int, weights: LevelWeights, pi):
    """Expected weighted interval score, in one pass over the outcomes."""
    p = np.atleast_1d(np.asarray(pi, float))
    scores = np.zeros((p.size, n + 1))
    for gamma, w in weights.levels:
        if w == 0.0:
            continue
        lower, upper = interval_table(method, BinomialSetting(n, gamma))
        scores += w * _eis_matrix(lower, upper, p, 1.0 - gamma)
    values = np.sum(binom_pmf_matrix(n, p) * scores, axis=1)
    return _scalar_or_array(values, pi)


def smoothed_cp(
    method,
    setting: BinomialSetting,
    pi: float,
    epsilon: float = DEFAULT_EPSILON,
    quad: QuadratureSpec | None = None,
) -> float:
    """Coverage probability averaged over ``[pi - epsilon, pi + epsilon]``.

    The window is clipped to ``[0, 1]`` and the boxcar kernel renormalized to
    the clipped length.  Breakpoints at the interval limits keep each
    quadrature panel free of coverage jumps.
    """
    if not epsilon > 0.0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    if not (0.0 < pi < 1.0):
        raise ValueError(f"pi must lie in (0, 1), got {pi}")
    a, b = max(pi - epsilon, 0.0), min(pi + epsilon, 1.0)
    spec = (quad or QuadratureSpec()).with_breakpoints(all_endpoints(method, setting))
    total = integrate_piecewise(lambda t: coverage_probability(method, setting, t), spec, a, b)
    return total / (b - a)


def evaluate_point(
    method, setting: BinomialSetting, pi: float, epsilon: float | None = None
) -> EvaluationPoint:
    eis = expected_interval_score(method, setting, pi)
    return EvaluationPoint(
        pi=float(pi),
        cp=coverage_probability(method, setting, pi),
        ew=expected_width(method, setting, pi),
        eis=eis,
        smoothed_cp=None if epsilon is None else smoothed_cp(method, setting, pi, epsilon),
        eis_deficit=eis - asym_eis(pi, setting.n, setting.gamma),
    )

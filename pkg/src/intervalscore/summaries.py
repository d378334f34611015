"""Integral summaries of the expected interval score deficit and method rankings.

The deficit is the expected (weighted) interval score minus its closed-form
normal-approximation reference.  It is integrated over ``pi`` either uniformly
or on the arcsine-root scale ``phi = asin(sqrt(pi))``, which up-weights
proportions near 0 and 1.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence, Union

import numpy as np

from .asymptotics import asym_eis, asym_ewis
from .evaluation import LevelWeights, coverage_probability, expected_interval_score, expected_wis
from .intervals import BinomialSetting, MethodId, all_endpoints
from .numerics import QuadratureSpec, QuadratureWarning, integrate_piecewise

__all__ = [
    "RankingTable",
    "SCALES",
    "SummaryRow",
    "eis_deficit",
    "method_summary",
    "prior_averaged_coverage",
    "rank_methods",
    "ranking_grid",
    "uniform_integral",
    "varstab_integral",
    "wis_deficit",
]

SCALES = ("uniform", "varstab")
TIE_TOL = 1e-12

Levels = Union[float, LevelWeights]


def eis_deficit(method, setting: BinomialSetting, pi):
    return expected_interval_score(method, setting, pi) - asym_eis(pi, setting.n, setting.gamma)


def wis_deficit(method, n: int, weights: LevelWeights, pi):
    return expected_wis(method, n, weights, pi) - asym_ewis(pi, n, weights)


def uniform_integral(
    f: Callable[[np.ndarray], np.ndarray],
    breakpoints: Sequence[float] = (),
    quad: QuadratureSpec | None = None,
    full_output: bool = False,
):
    """Integral of ``f`` over ``pi`` in (0, 1)."""
    spec = (quad or QuadratureSpec()).with_breakpoints(breakpoints)
    return integrate_piecewise(f, spec, 0.0, 1.0, full_output=full_output)


def varstab_integral(
    f: Callable[[np.ndarray], np.ndarray],
    breakpoints: Sequence[float] = (),
    quad: QuadratureSpec | None = None,
    full_output: bool = False,
):
    """Integral of ``f(sin(phi)**2)`` over ``phi`` in (0, pi/2).

    Equals ``pi/2`` times the integral of ``f`` against the Beta(1/2, 1/2)
    density.  Breakpoints are given on the proportion scale and mapped.
    """
    phis = [math.asin(math.sqrt(t)) for t in breakpoints if 0.0 < t < 1.0]
    spec = (quad or QuadratureSpec()).with_breakpoints(phis)
    return integrate_piecewise(
        lambda phi: f(np.sin(phi) ** 2), spec, 0.0, 0.5 * math.pi, full_output=full_output
    )


def _as_levels(levels: Levels) -> LevelWeights | float:
    if isinstance(levels, LevelWeights):
        return levels
    gamma = float(levels)
    if not (0.0 < gamma < 1.0):
        raise ValueError(f"gamma must lie in (0, 1), got {gamma}")
    return gamma


def levels_label(levels: Levels) -> str:
    levels = _as_levels(levels)
    return levels.label() if isinstance(levels, LevelWeights) else f"{levels:g}"


def _integrand_and_breaks(method, n: int, levels: Levels):
    levels = _as_levels(levels)
    if isinstance(levels, LevelWeights):
        breaks = set()
        for gamma, w in levels.levels:
            if w > 0.0:
                breaks.update(all_endpoints(method, BinomialSetting(n, gamma)))
        return (lambda p: wis_deficit(method, n, levels, p)), sorted(breaks)
    setting = BinomialSetting(n, levels)
    return (lambda p: eis_deficit(method, setting, p)), all_endpoints(method, setting)


@dataclass(frozen=True)
class SummaryRow:
    method: MethodId
    n: int
    levels: str
    uniform_integral: float
    varstab_integral: float
    warnings: tuple[str, ...] = ()

    def value(self, scale: str) -> float:
        if scale == "uniform":
            return self.uniform_integral
        if scale == "varstab":
            return self.varstab_integral
        raise ValueError(f"scale must be one of {SCALES}, got {scale!r}")


def method_summary(
    method, n: int, levels: Levels, quad: QuadratureSpec | None = None
) -> SummaryRow:
    """Uniform and variance-stabilized integrals of one method's deficit.

    Quadrature warnings are recorded on the row instead of being raised.
    """
    method = MethodId(method)
    f, breaks = _integrand_and_breaks(method, n, levels)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", QuadratureWarning)
        uni = uniform_integral(f, breaks, quad)
        vs = varstab_integral(f, breaks, quad)
    msgs = tuple(str(w.message) for w in caught if issubclass(w.category, QuadratureWarning))
    return SummaryRow(method, n, levels_label(levels), float(uni), float(vs), msgs)


@dataclass(frozen=True)
class RankingTable:
    n: int
    levels: str
    scale: str
    entries: tuple[tuple[MethodId, float], ...]
    ties: tuple[MethodId, ...] = ()
    warnings: tuple[str, ...] = field(default=(), compare=False)

    @property
    def order(self) -> list[MethodId]:
        return [m for m, _ in self.entries]

    def rank_of(self, method) -> int:
        return self.order.index(MethodId(method)) + 1


def _table_from_rows(rows: Sequence[SummaryRow], scale: str) -> RankingTable:
    pairs = sorted(((r.method, r.value(scale)) for r in rows), key=lambda mv: (mv[1], mv[0].value))
    # values within TIE_TOL are ordered by name and reported as ties
    ordered: list[tuple[MethodId, float]] = []
    ties: set[MethodId] = set()
    i = 0
    while i < len(pairs):
        j = i + 1
        while j < len(pairs) and pairs[j][1] - pairs[j - 1][1] <= TIE_TOL:
            j += 1
        group = sorted(pairs[i:j], key=lambda mv: mv[0].value)
        if len(group) > 1:
            ties.update(m for m, _ in group)
        ordered.extend(group)
        i = j
    warns = tuple(w for r in rows for w in r.warnings)
    return RankingTable(
        n=rows[0].n,
        levels=rows[0].levels,
        scale=scale,
        entries=tuple(ordered),
        ties=tuple(sorted(ties, key=lambda m: m.value)),
        warnings=warns,
    )


def _summary_task(args) -> SummaryRow:
    method, n, levels, quad = args
    return method_summary(method, n, levels, quad)


def _map(func, items: list, workers: int) -> list:
    if workers <= 1 or len(items) <= 1:
        return [func(it) for it in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        # map preserves submission order whatever the completion order
        return list(pool.map(func, items))


def rank_methods(
    methods: Iterable,
    n: int,
    levels: Levels,
    scale: str = "uniform",
    quad: QuadratureSpec | None = None,
    workers: int = 1,
) -> RankingTable:
    """Rank methods by the integrated deficit on one scale, best (lowest) first."""
    if scale not in SCALES:
        raise ValueError(f"scale must be one of {SCALES}, got {scale!r}")
    methods = [MethodId(m) for m in methods]
    if not methods:
        raise ValueError("need at least one method")
    rows = _map(_summary_task, [(m, n, levels, quad) for m in methods], workers)
    return _table_from_rows(rows, scale)


def ranking_grid(
    methods: Iterable,
    ns: Iterable[int],
    levels: Levels,
    scales: Sequence[str] = SCALES,
    quad: QuadratureSpec | None = None,
    workers: int = 1,
) -> list[RankingTable]:
    """Ranking tables for every ``n`` and scale; one table per (n, scale), n-major."""
    methods = [MethodId(m) for m in methods]
    ns = list(ns)
    for s in scales:
        if s not in SCALES:
            raise ValueError(f"scale must be one of {SCALES}, got {s!r}")
    items = [(m, n, levels, quad) for n in ns for m in methods]
    rows = _map(_summary_task, items, workers)
    tables = []
    k = len(methods)
    for i, n in enumerate(ns):
        chunk = rows[i * k : (i + 1) * k]
        for s in scales:
            tables.append(_table_from_rows(chunk, s))
    return tables


def prior_averaged_coverage(
    method, setting: BinomialSetting, prior: str, quad: QuadratureSpec | None = None
) -> float:
    """Coverage probability integrated against a uniform or Jeffreys prior on ``pi``.

    The Jeffreys case uses the arcsine-root scale, where the weight is flat and
    the integrand has no endpoint singularity.
    """
    breaks = all_endpoints(method, setting)

    def cp(p):
        return coverage_probability(method, setting, p)

    if prior == "uniform":
        return float(uniform_integral(cp, breaks, quad))
    if prior == "jeffreys":
        return float(varstab_integral(cp, breaks, quad)) * 2.0 / math.pi
    raise ValueError(f"prior must be 'uniform' or 'jeffreys', got {prior!r}")

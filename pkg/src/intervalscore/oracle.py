"""Independent cross-checks: Monte Carlo estimates and brute-force numerics.

Nothing here is used on the main computation path; it exists so the exact
enumeration results and the Newton-based quantiles can be audited by a
second, simpler route.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .intervals import BinomialSetting, MethodId, interval_table
from .numerics import beta_pdf, binom_pmf_matrix, reg_inc_beta

__all__ = [
    "McEstimate",
    "beta_quantile_bisect",
    "hpd_density_gap",
    "hpd_grid_search",
    "mc_measure",
    "random_mc_configs",
    "sample_binomial",
]

MEASURES = ("cp", "ew", "eis")


@dataclass(frozen=True)
class McEstimate:
    mean: float
    std_error: float
    replications: int
    seed: int


def sample_binomial(rng: np.random.Generator, n: int, pi: float, size: int) -> np.ndarray:
    """Exact Binomial(n, pi) draws by inverting the cumulative pmf table."""
    cdf = np.cumsum(binom_pmf_matrix(n, pi)[0])
    cdf[-1] = 1.0
    u = rng.random(size)
    # smallest x with cdf[x] > u
    return np.searchsorted(cdf, u, side="right").clip(max=n)


def mc_measure(
    measure: str,
    method,
    setting: BinomialSetting,
    pi: float,
    replications: int = 1_000_000,
    seed: int = 0,
) -> McEstimate:
    """Monte Carlo estimate of CP, EW or EIS with its standard error.

    The n + 1 intervals are computed once; each replication is a table lookup.
    """
    if measure not in MEASURES:
        raise ValueError(f"measure must be one of {MEASURES}, got {measure!r}")
    if replications < 1:
        raise ValueError("replications must be >= 1")
    if not (0 <= seed < 2**64):
        raise ValueError("seed must be a 64-bit unsigned integer")
    lower, upper = interval_table(method, setting)
    rng = np.random.Generator(np.random.PCG64(seed))
    xs = sample_binomial(rng, setting.n, pi, replications)
    l, u = lower[xs], upper[xs]
    if measure == "cp":
        vals = ((l <= pi) & (pi <= u)).astype(float)
    elif measure == "ew":
        vals = u - l
    else:
        k = 2.0 / setting.alpha
        vals = (u - l) + k * np.maximum(l - pi, 0.0) + k * np.maximum(pi - u, 0.0)
    mean = float(vals.mean())
    se = float(vals.std(ddof=1) / math.sqrt(replications)) if replications > 1 else 0.0
    return McEstimate(mean, se, replications, seed)


def beta_quantile_bisect(a: float, b: float, p: float, tol: float = 1e-12) -> float:
    """Plain bisection for the Beta(a, b) p-quantile; deliberately no Newton steps."""
    if not (0.0 < p < 1.0):
        raise ValueError("p must lie in (0, 1)")
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if reg_inc_beta(a, b, mid) < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def hpd_grid_search(a: float, b: float, gamma: float, grid_size: int = 2001) -> tuple[float, float]:
    """Shortest mass-``gamma`` interval of Beta(a, b) over a grid of lower tail masses."""
    best = None
    for w in np.linspace(0.0, 1.0 - gamma, grid_size):
        lo = 0.0 if w <= 0.0 else beta_quantile_bisect(a, b, float(w))
        top = w + gamma
        hi = 1.0 if top >= 1.0 else beta_quantile_bisect(a, b, float(top))
        if best is None or hi - lo < best[1] - best[0]:
            best = (lo, hi)
    return best


def hpd_density_gap(a: float, b: float, lo: float, hi: float) -> float:
    """Density difference at the two ends; zero for an interior HPD interval."""
    return beta_pdf(a, b, lo) - beta_pdf(a, b, hi)


def random_mc_configs(count: int = 20, seed: int = 20220301) -> list[tuple]:
    """Reproducible (method, n, gamma, pi) spot checks; every method appears once
    before any repeats."""
    rng = np.random.Generator(np.random.PCG64(seed))
    methods = list(MethodId)
    configs = []
    for i in range(count):
        method = methods[i] if i < len(methods) else methods[int(rng.integers(len(methods)))]
        n = int(rng.integers(1, 61))
        gamma = float(rng.choice([0.8, 0.9, 0.95, 0.99]))
        pi = round(float(rng.uniform(0.02, 0.98)), 6)
        configs.append((method, n, gamma, pi))
    return configs

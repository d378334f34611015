"""Normal-approximation reference values for expected width and interval score."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import norm_pdf, norm_quantile

__all__ = ["AsymptoticReference", "asym_eis", "asym_ew", "asym_ewis", "reference"]


def _sigma(pi, n: int):
    p = np.asarray(pi, float)
    if np.any((p < 0.0) | (p > 1.0)):
        raise ValueError("pi must lie in [0, 1]")
    if n < 1:
        raise ValueError("n must be >= 1")
    return np.sqrt(np.maximum(p * (1.0 - p), 0.0) / n)


def _out(v):
    return float(v) if np.ndim(v) == 0 else v


def asym_ew(pi, n: int, gamma: float):
    """``2 q sigma`` with ``q`` the ``1 - alpha/2`` normal quantile."""
    alpha = 1.0 - gamma
    q = norm_quantile(1.0 - alpha / 2.0)
    return _out(2.0 * q * _sigma(pi, n))


def asym_eis(pi, n: int, gamma: float):
    """``2 sigma phi(q) / (1 - Phi(q))``, with ``1 - Phi(q)`` taken as ``alpha/2``."""
    alpha = 1.0 - gamma
    q = norm_quantile(1.0 - alpha / 2.0)
    return _out(4.0 * _sigma(pi, n) * norm_pdf(q) / alpha)


def asym_ewis(pi, n: int, weights):
    total = 0.0
    for gamma, w in weights.levels:
        total = total + w * np.asarray(asym_eis(pi, n, gamma))
    return _out(total)


@dataclass(frozen=True)
class AsymptoticReference:
    pi: float
    n: int
    gamma: float
    sigma: float
    asym_ew: float
    asym_eis: float


def reference(pi: float, n: int, gamma: float) -> AsymptoticReference:
    return AsymptoticReference(
        pi=pi,
        n=n,
        gamma=gamma,
        sigma=float(_sigma(pi, n)),
        asym_ew=asym_ew(pi, n, gamma),
        asym_eis=asym_eis(pi, n, gamma),
    )

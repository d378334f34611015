"""The eleven interval estimators for a binomial proportion.

Every constructor takes the observed count ``x`` and a :class:`BinomialSetting`
and returns an :class:`IntervalEstimate`.  Limits outside ``[0, 1]`` are kept
as ``raw_lower``/``raw_upper`` and truncated for ``lower``/``upper``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .numerics import (
    NumericalError,
    beta_pdf,
    beta_quantile,
    chi2_quantile_df1,
    find_root,
    norm_quantile,
    reg_inc_beta,
)

__all__ = [
    "BinomialSetting",
    "IntervalEstimate",
    "MethodId",
    "agresti_coull",
    "all_endpoints",
    "arcsine_wald",
    "clopper_pearson",
    "compute_interval",
    "equal_tailed",
    "hpd",
    "interval_table",
    "likelihood_ratio",
    "lr_deviance",
    "parse_methods",
    "rindskopf",
    "wald",
    "wilson",
]

# Root tolerance for the numerically defined limits; well below what the
# mirror and deviance checks need.
_ROOT_TOL = 1e-14


class MethodId(str, enum.Enum):
    WALD = "wald"
    RINDSKOPF = "rindskopf"
    ARCSINE = "arcsine"
    WILSON = "wilson"
    AGRESTI_COULL = "agresti-coull"
    LR = "lr"
    CLOPPER_PEARSON = "clopper-pearson"
    JEFFREYS_ET = "jeffreys-et"
    JEFFREYS_HPD = "jeffreys-hpd"
    UNIFORM_ET = "uniform-et"
    UNIFORM_HPD = "uniform-hpd"

    def __str__(self) -> str:
        return self.value


def parse_methods(names) -> list[MethodId]:
    """Turn a comma separated string (or iterable) of method names into MethodIds."""
    if isinstance(names, str):
        names = [s.strip() for s in names.split(",") if s.strip()]
    out = []
    valid = ", ".join(m.value for m in MethodId)
    for name in names:
        if isinstance(name, MethodId):
            out.append(name)
            continue
        try:
            out.append(MethodId(name))
        except ValueError:
            raise ValueError(f"unknown method {name!r}; valid names: {valid}") from None
    if not out:
        raise ValueError(f"no methods given; valid names: {valid}")
    return out


@dataclass(frozen=True)
class BinomialSetting:
    n: int
    gamma: float
    alpha: float = field(init=False)
    q_alpha: float = field(init=False)

    def __post_init__(self):
        if isinstance(self.n, bool) or int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be an integer >= 1, got {self.n!r}")
        if not (0.0 < self.gamma < 1.0):
            raise ValueError(f"gamma must lie in (0, 1), got {self.gamma!r}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "alpha", 1.0 - self.gamma)
        object.__setattr__(self, "q_alpha", norm_quantile(1.0 - self.alpha / 2.0))


@dataclass(frozen=True)
class IntervalEstimate:
    lower: float
    upper: float
    raw_lower: float
    raw_upper: float
    method: MethodId
    setting: BinomialSetting
    x: int

    @property
    def width(self) -> float:
        return self.upper - self.lower


def _make(method, setting, x, raw_lower, raw_upper) -> IntervalEstimate:
    lower = max(raw_lower, 0.0)
    upper = min(raw_upper, 1.0)
    if not (0.0 <= lower <= upper <= 1.0):
        raise NumericalError(f"{method}: invalid limits [{lower}, {upper}] at x={x}")
    return IntervalEstimate(lower, upper, raw_lower, raw_upper, method, setting, x)


def _check_x(x: int, setting: BinomialSetting) -> None:
    if isinstance(x, bool) or int(x) != x or not (0 <= x <= setting.n):
        raise ValueError(f"x must be an integer in [0, {setting.n}], got {x!r}")


def wald(x: int, setting: BinomialSetting) -> IntervalEstimate:
    _check_x(x, setting)
    n, q = setting.n, setting.q_alpha
    p = x / n
    if x == 0 or x == n:
        return _make(MethodId.WALD, setting, x, p, p)
    half = q * math.sqrt(p * (1.0 - p) / n)
    return _make(MethodId.WALD, setting, x, p - half, p + half)


def _expit(v: float) -> float:
    if v >= 0:
        return 1.0 / (1.0 + math.exp(-v))
    e = math.exp(v)
    return e / (1.0 + e)


def rindskopf(x: int, setting: BinomialSetting) -> IntervalEstimate:
    _check_x(x, setting)
    n, q = setting.n, setting.q_alpha
    s, f = x + 0.5, n - x + 0.5
    centre = math.log(s / f)
    half = q * math.sqrt(1.0 / s + 1.0 / f)
    return _make(MethodId.RINDSKOPF, setting, x, _expit(centre - half), _expit(centre + half))


def arcsine_wald(x: int, setting: BinomialSetting) -> IntervalEstimate:
    """Wald interval on the arcsine-root scale.

    Overshoot is truncated on the angle scale, to ``[0, pi/2]``, before
    mapping back with ``sin**2``; the returned raw limits therefore coincide
    with the truncated ones.
    """
    _check_x(x, setting)
    n, q = setting.n, setting.q_alpha
    centre = math.asin(math.sqrt(x / n))
    half = q / math.sqrt(4.0 * n)
    lo = max(centre - half, 0.0)
    hi = min(centre + half, 0.5 * math.pi)
    lower = math.sin(lo) ** 2
    upper = math.sin(hi) ** 2
    if x == 0:
        lower = 0.0
    if x == n:
        upper = 1.0
    return _make(MethodId.ARCSINE, setting, x, lower, upper)


def wilson(x: int, setting: BinomialSetting) -> IntervalEstimate:
    _check_x(x, setting)
    n, q = setting.n, setting.q_alpha
    p = x / n
    q2 = q * q
    centre = (x + q2 / 2.0) / (n + q2)
    half = q * math.sqrt(n) / (n + q2) * math.sqrt(p * (1.0 - p) + q2 / (4.0 * n))
    lower, upper = centre - half, centre + half
    # the formula gives exactly 0 / 1 here, up to rounding
    if x == 0:
        lower = 0.0
    if x == n:
        upper = 1.0
    return _make(MethodId.WILSON, setting, x, lower, upper)


def agresti_coull(x: int, setting: BinomialSetting) -> IntervalEstimate:
    _check_x(x, setting)
    n, q = setting.n, setting.q_alpha
    centre = (x + 2.0) / (n + 4.0)
    half = q * math.sqrt(centre * (1.0 - centre) / (n + 4.0))
    return _make(MethodId.AGRESTI_COULL, setting, x, centre - half, centre + half)


def lr_deviance(pi: float, x: int, n: int) -> float:
    """``-2 log(L(pi) / L(x/n))`` for a binomial likelihood, with 0 log 0 = 0."""
    p = x / n
    dev = 0.0
    if x > 0:
        dev += x * math.log(p / pi)
    if x < n:
        dev += (n - x) * math.log((1.0 - p) / (1.0 - pi))
    return 2.0 * dev


def likelihood_ratio(x: int, setting: BinomialSetting) -> IntervalEstimate:
    _check_x(x, setting)
    n = setting.n
    crit = chi2_quantile_df1(setting.gamma)
    if x == 0:
        return _make(MethodId.LR, setting, x, 0.0, -math.expm1(-crit / (2.0 * n)))
    if x == n:
        return _make(MethodId.LR, setting, x, math.exp(-crit / (2.0 * n)), 1.0)
    p = x / n

    def g(pi):
        return lr_deviance(pi, x, n) - crit

    # deviance is finite at 1e-300 (log terms), so the end of the bracket is safe
    lower = find_root(g, 1e-300, p, tol=_ROOT_TOL)
    upper = find_root(g, p, 1.0 - 1e-16, tol=_ROOT_TOL)
    return _make(MethodId.LR, setting, x, lower, upper)


def clopper_pearson(x: int, setting: BinomialSetting) -> IntervalEstimate:
    _check_x(x, setting)
    n, alpha = setting.n, setting.alpha
    if x == 0:
        lower, upper = 0.0, -math.expm1(math.log(alpha / 2.0) / n)
    elif x == n:
        lower, upper = math.exp(math.log(alpha / 2.0) / n), 1.0
    else:
        lower = beta_quantile(x, n - x + 1, alpha / 2.0)
        # upper (1 - alpha/2)-quantile of Beta(x+1, n-x), taken from the mirrored lower tail
        upper = 1.0 - beta_quantile(n - x, x + 1, alpha / 2.0)
    return _make(MethodId.CLOPPER_PEARSON, setting, x, lower, upper)


_PRIORS = {"uniform": (1.0, 1.0), "jeffreys": (0.5, 0.5)}


def _posterior(x: int, setting: BinomialSetting, prior: str) -> tuple[float, float]:
    try:
        a0, b0 = _PRIORS[prior]
    except KeyError:
        raise ValueError(f"prior must be 'uniform' or 'jeffreys', got {prior!r}") from None
    return a0 + x, b0 + setting.n - x


def equal_tailed(x: int, setting: BinomialSetting, prior: str) -> IntervalEstimate:
    _check_x(x, setting)
    a, b = _posterior(x, setting, prior)
    method = MethodId.UNIFORM_ET if prior == "uniform" else MethodId.JEFFREYS_ET
    half_alpha = setting.alpha / 2.0
    lower = beta_quantile(a, b, half_alpha)
    # upper tail as the mirrored lower quantile: keeps both tails equally accurate
    upper = 1.0 - beta_quantile(b, a, half_alpha)
    return _make(method, setting, x, lower, upper)


def _hpd_limits(a: float, b: float, gamma: float) -> tuple[float, float]:
    """Shortest mass-``gamma`` interval of a unimodal Beta(a, b) with a, b > 1."""
    if a == b:
        half = (1.0 - gamma) / 2.0
        return beta_quantile(a, b, half), 1.0 - beta_quantile(b, a, half)
    if a > b:
        # mirror so the lower limit is on the flatter side, then flip back
        lo, hi = _hpd_limits(b, a, gamma)
        return 1.0 - hi, 1.0 - lo

    def upper_for(lo_mass: float) -> float:
        top = lo_mass + gamma
        return 1.0 - beta_quantile(b, a, 1.0 - top) if top < 1.0 else 1.0

    # Parametrize by the mass below the lower limit, w in [0, 1 - gamma].
    # g < 0 at w = 0 (density 0 at t = 0) and g > 0 at w = 1 - gamma.
    def g(lo_mass: float) -> float:
        lo = beta_quantile(a, b, lo_mass) if lo_mass > 0.0 else 0.0
        return beta_pdf(a, b, lo) - beta_pdf(a, b, upper_for(lo_mass))

    w = find_root(g, 0.0, 1.0 - gamma, tol=1e-15)
    lower = beta_quantile(a, b, w) if w > 0.0 else 0.0
    return lower, upper_for(w)


def hpd(x: int, setting: BinomialSetting, prior: str) -> IntervalEstimate:
    """Highest posterior density interval under a uniform or Jeffreys prior."""
    _check_x(x, setting)
    a, b = _posterior(x, setting, prior)
    method = MethodId.UNIFORM_HPD if prior == "uniform" else MethodId.JEFFREYS_HPD
    gamma = setting.gamma
    if x == 0:
        lower, upper = 0.0, 1.0 - beta_quantile(b, a, 1.0 - gamma)
    elif x == setting.n:
        lower, upper = beta_quantile(a, b, 1.0 - gamma), 1.0
    else:
        lower, upper = _hpd_limits(a, b, gamma)
        mass = reg_inc_beta(a, b, upper) - reg_inc_beta(a, b, lower)
        if abs(mass - gamma) > 1e-9:
            raise NumericalError(f"HPD mass {mass} differs from {gamma} (a={a}, b={b})")
    return _make(method, setting, x, lower, upper)


_DISPATCH = {
    MethodId.WALD: wald,
    MethodId.RINDSKOPF: rindskopf,
    MethodId.ARCSINE: arcsine_wald,
    MethodId.WILSON: wilson,
    MethodId.AGRESTI_COULL: agresti_coull,
    MethodId.LR: likelihood_ratio,
    MethodId.CLOPPER_PEARSON: clopper_pearson,
    MethodId.JEFFREYS_ET: lambda x, s: equal_tailed(x, s, "jeffreys"),
    MethodId.UNIFORM_ET: lambda x, s: equal_tailed(x, s, "uniform"),
    MethodId.JEFFREYS_HPD: lambda x, s: hpd(x, s, "jeffreys"),
    MethodId.UNIFORM_HPD: lambda x, s: hpd(x, s, "uniform"),
}


def compute_interval(method, x: int, setting: BinomialSetting) -> IntervalEstimate:
    return _DISPATCH[MethodId(method)](x, setting)


@lru_cache(maxsize=1024)
def _table(method: MethodId, n: int, gamma: float) -> tuple[np.ndarray, np.ndarray]:
    setting = BinomialSetting(n, gamma)
    ests = [compute_interval(method, x, setting) for x in range(n + 1)]
    lower = np.array([e.lower for e in ests])
    upper = np.array([e.upper for e in ests])
    lower.setflags(write=False)
    upper.setflags(write=False)
    return lower, upper


def interval_table(method, setting: BinomialSetting) -> tuple[np.ndarray, np.ndarray]:
    """Truncated lower and upper limits for x = 0..n as read-only arrays (cached)."""
    return _table(MethodId(method), setting.n, setting.gamma)


def all_endpoints(method, setting: BinomialSetting) -> list[float]:
    """Sorted distinct interval limits over all outcomes, restricted to (0, 1)."""
    lower, upper = interval_table(method, setting)
    pts = np.unique(np.concatenate([lower, upper]))
    return [float(t) for t in pts if 0.0 < t < 1.0]

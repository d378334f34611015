"""Special functions, bracketing root finder and piecewise Gauss-Legendre quadrature.

Everything here is scalar pure Python except the pmf matrix and the
quadrature driver, which work on numpy arrays so that integrands can be
evaluated on a whole batch of nodes at once.
"""

from __future__ import annotations

import heapq
import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "BracketError",
    "NumericalError",
    "QuadratureInfo",
    "QuadratureSpec",
    "QuadratureWarning",
    "beta_pdf",
    "beta_quantile",
    "binom_pmf",
    "binom_pmf_matrix",
    "chi2_quantile_df1",
    "find_root",
    "integrate_piecewise",
    "log_binom_coeff",
    "norm_cdf",
    "norm_pdf",
    "norm_quantile",
    "reg_inc_beta",
]

_EPS = np.finfo(float).eps
_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


class NumericalError(ArithmeticError):
    """A numerical routine failed to produce a trustworthy result."""


class BracketError(NumericalError):
    """The supplied interval does not bracket a sign change."""


class QuadratureWarning(RuntimeWarning):
    """Quadrature stopped before reaching the requested tolerance."""


def _check_prob(p: float, name: str = "p", open_: bool = False) -> None:
    if not (0.0 <= p <= 1.0) or math.isnan(p):
        raise ValueError(f"{name} must lie in [0, 1], got {p!r}")
    if open_ and (p == 0.0 or p == 1.0):
        raise ValueError(f"{name} must lie in (0, 1), got {p!r}")


# --------------------------------------------------------------------------
# Binomial
# --------------------------------------------------------------------------


_EXACT_COMB_MAX = 2000


def log_binom_coeff(n: int, x: int) -> float:
    """Natural log of ``n choose x``; exact integer arithmetic for moderate n, log-gamma beyond."""
    if n < 0 or x < 0 or x > n:
        raise ValueError(f"need 0 <= x <= n, got n={n}, x={x}")
    if x == 0 or x == n:
        return 0.0
    if n <= _EXACT_COMB_MAX:
        return math.log(math.comb(n, x))
    return math.lgamma(n + 1) - math.lgamma(x + 1) - math.lgamma(n - x + 1)


def binom_pmf(n: int, pi: float, x: int) -> float:
    """P(X = x) for X ~ Binomial(n, pi), using 0**0 = 1 at pi in {0, 1}."""
    _check_prob(pi, "pi")
    lc = log_binom_coeff(n, x)
    if pi == 0.0:
        return 1.0 if x == 0 else 0.0
    if pi == 1.0:
        return 1.0 if x == n else 0.0
    return math.exp(lc + x * math.log(pi) + (n - x) * math.log1p(-pi))


@lru_cache(maxsize=256)
def _log_coeffs(n: int) -> np.ndarray:
    coeffs = np.array([log_binom_coeff(n, x) for x in range(n + 1)])
    coeffs.setflags(write=False)
    return coeffs


def binom_pmf_matrix(n: int, pis) -> np.ndarray:
    """Binomial pmf for every ``pi`` in ``pis`` (rows) and every x = 0..n (columns).

    Terms are accumulated in log space and exponentiated once, so large ``n``
    does not overflow the binomial coefficient.
    """
    pis = np.atleast_1d(np.asarray(pis, dtype=float))
    if np.any((pis < 0.0) | (pis > 1.0)):
        raise ValueError("pi values must lie in [0, 1]")
    xs = np.arange(n + 1, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_p = np.log(pis)[:, None]
        log_q = np.log1p(-pis)[:, None]
        # 0 * log(0) must read as 0 so the degenerate pmfs come out right.
        t1 = np.where(xs[None, :] == 0.0, 0.0, xs[None, :] * log_p)
        t2 = np.where(xs[None, :] == n, 0.0, (n - xs[None, :]) * log_q)
    pmf = np.exp(_log_coeffs(n)[None, :] + t1 + t2)
    # rounding in the exponents leaves rows off by ~n*eps; renormalize
    return pmf / pmf.sum(axis=1, keepdims=True)


# --------------------------------------------------------------------------
# Beta
# --------------------------------------------------------------------------


def _log_beta_front(a: float, b: float, t: float) -> float:
    return (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(t)
        + b * math.log1p(-t)
    )


def _betacf(a: float, b: float, t: float) -> float:
    """Continued fraction for I_t(a, b), modified Lentz evaluation."""
    tiny = 1e-300
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * t / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, 10_000):
        m2 = 2 * m
        aa = m * (b - m) * t / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * t / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            return h
    raise NumericalError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, t={t})")


def reg_inc_beta(a: float, b: float, t: float) -> float:
    """Regularized incomplete beta function I_t(a, b).

    The continued fraction converges quickly for ``t < (a + 1) / (a + b + 2)``;
    beyond that point the symmetry ``I_t(a, b) = 1 - I_{1-t}(b, a)`` is used.
    """
    if not (a > 0.0 and b > 0.0):
        raise ValueError(f"shape parameters must be positive, got a={a}, b={b}")
    _check_prob(t, "t")
    if t == 0.0:
        return 0.0
    if t == 1.0:
        return 1.0
    if t < (a + 1.0) / (a + b + 2.0):
        return math.exp(_log_beta_front(a, b, t)) * _betacf(a, b, t) / a
    return 1.0 - math.exp(_log_beta_front(b, a, 1.0 - t)) * _betacf(b, a, 1.0 - t) / b


def beta_pdf(a: float, b: float, t: float) -> float:
    """Beta(a, b) density, with the limiting value at t in {0, 1}."""
    if t <= 0.0 or t >= 1.0:
        edge_shape = a if t <= 0.0 else b
        if edge_shape < 1.0:
            return math.inf
        if edge_shape > 1.0:
            return 0.0
        return math.exp(math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b))
    return math.exp(
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + (a - 1.0) * math.log(t)
        + (b - 1.0) * math.log1p(-t)
    )


def _beta_quantile_guess(a: float, b: float, p: float) -> float:
    if a >= 1.0 and b >= 1.0:
        pp = p if p < 0.5 else 1.0 - p
        s = math.sqrt(-2.0 * math.log(pp))
        x = (2.30753 + s * 0.27061) / (1.0 + s * (0.99229 + s * 0.04481)) - s
        if p < 0.5:
            x = -x
        al = (x * x - 3.0) / 6.0
        h = 2.0 / (1.0 / (2.0 * a - 1.0 + 1e-300) + 1.0 / (2.0 * b - 1.0 + 1e-300))
        w = x * math.sqrt(max(al + h, 0.0)) / h - (
            1.0 / (2.0 * b - 1.0 + 1e-300) - 1.0 / (2.0 * a - 1.0 + 1e-300)
        ) * (al + 5.0 / 6.0 - 2.0 / (3.0 * h))
        arg = min(2.0 * w, 700.0)
        return a / (a + b * math.exp(arg))
    lna = math.log(a / (a + b))
    lnb = math.log(b / (a + b))
    s = math.exp(a * lna) / a
    u = math.exp(b * lnb) / b
    w = s + u
    if p < s / w:
        return (a * w * p) ** (1.0 / a)
    return 1.0 - (b * w * (1.0 - p)) ** (1.0 / b)


def beta_quantile(a: float, b: float, p: float) -> float:
    """Inverse of ``reg_inc_beta`` in ``t``: the p-quantile of Beta(a, b).

    Newton iterations kept inside a shrinking bracket; a step that would leave
    the bracket is replaced by bisection, so convergence is guaranteed.
    """
    if not (a > 0.0 and b > 0.0):
        raise ValueError(f"shape parameters must be positive, got a={a}, b={b}")
    _check_prob(p, "p", open_=True)
    lo, hi = 0.0, 1.0
    t = _beta_quantile_guess(a, b, p)
    if not (0.0 < t < 1.0) or math.isnan(t):
        t = 0.5
    for _ in range(300):
        f = reg_inc_beta(a, b, t) - p
        if f == 0.0:
            return t
        if f < 0.0:
            lo = t
        else:
            hi = t
        dens = beta_pdf(a, b, t)
        step_ok = False
        if dens > 0.0 and math.isfinite(dens):
            t_new = t - f / dens
            if lo < t_new < hi:
                step_ok = True
        if not step_ok:
            # geometric midpoint in the far tails keeps progress relative
            if lo > 0.0 and hi < 1.0 and hi / lo > 1e3:
                t_new = math.sqrt(lo * hi)
            elif lo == 0.0 and hi < 1e-3:
                t_new = hi * 1e-3
            else:
                t_new = 0.5 * (lo + hi)
        if abs(t_new - t) <= 4.0 * _EPS * max(t_new, 1e-300) or hi - lo <= 4.0 * _EPS * hi:
            return t_new
        t = t_new
    raise NumericalError(f"beta_quantile failed to converge (a={a}, b={b}, p={p})")


# --------------------------------------------------------------------------
# Normal and chi-square(1)
# --------------------------------------------------------------------------


def norm_pdf(z: float) -> float:
    return _INV_SQRT_2PI * math.exp(-0.5 * z * z)


def norm_cdf(z: float) -> float:
    return 0.5 * math.erfc(-z / _SQRT2)


_ACKLAM_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
             1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_ACKLAM_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
             6.680131188771972e01, -1.328068155288572e01)
_ACKLAM_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
             -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_ACKLAM_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
             3.754408661907416e00)


def _acklam(p: float) -> float:
    a, b, c, d = _ACKLAM_A, _ACKLAM_B, _ACKLAM_C, _ACKLAM_D
    p_low = 0.02425
    if p < p_low:
        q = math.sqrt(-2.0 * math.log(p))
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) / (
            (((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0
        )
    if p > 1.0 - p_low:
        return -_acklam(1.0 - p)
    q = p - 0.5
    r = q * q
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q / (
        ((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0
    )


def norm_quantile(p: float) -> float:
    """Standard normal quantile.

    A rational starting value (relative error ~1e-9) is polished with Halley
    steps on the tail that is closer, so both tails stay accurate.
    """
    _check_prob(p, "p", open_=True)
    if p == 0.5:
        return 0.0
    if p > 0.5:
        return -norm_quantile(1.0 - p) if 1.0 - p > 0.0 else math.inf
    z = _acklam(p)
    for _ in range(3):
        # lower tail: cdf(z) = 0.5 erfc(-z/sqrt2) has no cancellation for z < 0
        e = 0.5 * math.erfc(-z / _SQRT2) - p
        u = e / norm_pdf(z)
        z_new = z - u / (1.0 + 0.5 * z * u)
        if z_new == z:
            break
        z = z_new
    return z


def chi2_quantile_df1(p: float) -> float:
    """Quantile of chi-square with one degree of freedom, via chi2(1) = Z**2."""
    _check_prob(p, "p", open_=True)
    return norm_quantile(0.5 * (1.0 + p)) ** 2


# --------------------------------------------------------------------------
# Root finding
# --------------------------------------------------------------------------


def find_root(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    tol: float = 1e-10,
    maxiter: int = 200,
) -> float:
    """Brent's method on a sign-change bracket ``[lo, hi]``.

    Inverse quadratic / secant steps are only accepted while they shrink the
    bracket fast enough; otherwise the step is a bisection.

    Raises:
        BracketError: ``f(lo)`` and ``f(hi)`` have the same strict sign.
    """
    a, b = float(lo), float(hi)
    fa, fb = f(a), f(b)
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if (fa > 0.0) == (fb > 0.0):
        raise BracketError(f"no sign change on [{lo}, {hi}]: f={fa}, {fb}")
    c, fc = a, fa
    d = e = b - a
    for _ in range(maxiter):
        if (fb > 0.0) == (fc > 0.0):
            c, fc = a, fa
            d = e = b - a
        if abs(fc) < abs(fb):
            a, b, c = b, c, b
            fa, fb, fc = fb, fc, fb
        tol1 = 2.0 * _EPS * abs(b) + 0.5 * tol
        xm = 0.5 * (c - b)
        if abs(xm) <= tol1 or fb == 0.0:
            return b
        if abs(e) >= tol1 and abs(fa) > abs(fb):
            s = fb / fa
            if a == c:
                p = 2.0 * xm * s
                q = 1.0 - s
            else:
                q = fa / fc
                r = fb / fc
                p = s * (2.0 * xm * q * (q - r) - (b - a) * (r - 1.0))
                q = (q - 1.0) * (r - 1.0) * (s - 1.0)
            if p > 0.0:
                q = -q
            p = abs(p)
            if 2.0 * p < min(3.0 * xm * q - abs(tol1 * q), abs(e * q)):
                e = d
                d = p / q
            else:
                d = xm
                e = d
        else:
            d = xm
            e = d
        a, fa = b, fb
        b += d if abs(d) > tol1 else math.copysign(tol1, xm)
        fb = f(b)
    raise NumericalError(f"find_root: no convergence in {maxiter} iterations")


# --------------------------------------------------------------------------
# Quadrature
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class QuadratureSpec:
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    nodes: int = 20
    breakpoints: tuple[float, ...] = ()
    max_panels: int = 4000

    def __post_init__(self):
        if not (self.rel_tol > 0 and math.isfinite(self.rel_tol)):
            raise ValueError("rel_tol must be finite and positive")
        if not (self.abs_tol > 0 and math.isfinite(self.abs_tol)):
            raise ValueError("abs_tol must be finite and positive")
        if self.nodes < 2:
            raise ValueError("need at least 2 nodes per panel")
        bp = tuple(float(b) for b in self.breakpoints)
        if any(b2 <= b1 for b1, b2 in zip(bp, bp[1:])):
            raise ValueError("breakpoints must be strictly increasing")
        object.__setattr__(self, "breakpoints", bp)

    def with_breakpoints(self, breakpoints: Sequence[float]) -> "QuadratureSpec":
        bp = sorted(set(float(b) for b in breakpoints))
        return QuadratureSpec(self.rel_tol, self.abs_tol, self.nodes, tuple(bp), self.max_panels)


@dataclass
class QuadratureInfo:
    value: float
    error: float
    panels: int
    subdivisions: int
    evaluations: int
    converged: bool
    intervals: list = field(default_factory=list, repr=False)


@lru_cache(maxsize=16)
def _gauss_legendre(nodes: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(nodes)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def integrate_piecewise(
    f: Callable[[np.ndarray], np.ndarray],
    spec: QuadratureSpec,
    lo: float,
    hi: float,
    full_output: bool = False,
):
    """Integrate a vectorized ``f`` over ``[lo, hi]``.

    The range is first cut at every breakpoint of ``spec`` lying strictly
    inside it.  Each panel carries the estimate from its two Gauss-Legendre
    halves and an error estimate (difference to the whole-panel rule).
    Panels are bisected in bulk, largest errors first, until the summed error
    falls below ``max(abs_tol, rel_tol * |I|)``.

    Returns the integral, or ``(integral, QuadratureInfo)`` when
    ``full_output`` is true.  If the panel budget runs out a
    :class:`QuadratureWarning` is issued and the best estimate returned.
    """
    lo, hi = float(lo), float(hi)
    if not lo < hi:
        raise ValueError(f"need lo < hi, got [{lo}, {hi}]")
    gx, gw = _gauss_legendre(spec.nodes)
    cuts = [lo] + [b for b in spec.breakpoints if lo < b < hi] + [hi]
    evaluations = 0

    def panel_rules(edges: np.ndarray) -> np.ndarray:
        # edges: (k, 2) -> integral of each panel
        nonlocal evaluations
        mid = 0.5 * (edges[:, 0] + edges[:, 1])
        half = 0.5 * (edges[:, 1] - edges[:, 0])
        pts = mid[:, None] + half[:, None] * gx[None, :]
        vals = np.asarray(f(pts.ravel()), dtype=float).reshape(pts.shape)
        evaluations += pts.size
        return half * (vals @ gw)

    def evaluate(edges: np.ndarray, whole: np.ndarray | None):
        mids = 0.5 * (edges[:, 0] + edges[:, 1])
        halves = np.concatenate(
            [np.column_stack([edges[:, 0], mids]), np.column_stack([mids, edges[:, 1]])]
        )
        if whole is None:
            both = panel_rules(np.concatenate([edges, halves]))
            k = len(edges)
            whole, left, right = both[:k], both[k : 2 * k], both[2 * k :]
        else:
            hv = panel_rules(halves)
            k = len(edges)
            left, right = hv[:k], hv[k:]
        fine = left + right
        err = np.abs(fine - whole)
        return fine, err, left, right

    edges = np.column_stack([cuts[:-1], cuts[1:]])
    fine, err, left, right = evaluate(edges, None)
    # each panel: [err, a, b, value, left, right]
    panels = [
        [float(err[i]), edges[i, 0], edges[i, 1], float(fine[i]), float(left[i]), float(right[i])]
        for i in range(len(edges))
    ]
    subdivisions = 0
    converged = False
    min_width = 64.0 * _EPS * max(abs(lo), abs(hi), 1.0)
    while True:
        total = math.fsum(p[3] for p in panels)
        total_err = math.fsum(p[0] for p in panels)
        target = max(spec.abs_tol, spec.rel_tol * abs(total))
        if total_err <= target:
            converged = True
            break
        if len(panels) >= spec.max_panels:
            break
        splittable = [p for p in panels if p[2] - p[1] > min_width and p[0] > 0.0]
        if not splittable:
            break
        # bulk marking: largest errors until half of the excess is covered
        marked = []
        acc = 0.0
        budget = spec.max_panels - len(panels)
        for p in heapq.nlargest(len(splittable), splittable, key=lambda q: q[0]):
            if len(marked) >= budget:
                break
            marked.append(p)
            acc += p[0]
            if acc >= 0.5 * total_err:
                break
        marked_ids = {id(p) for p in marked}
        kept = [p for p in panels if id(p) not in marked_ids]
        child_edges = []
        child_whole = []
        for p in marked:
            m = 0.5 * (p[1] + p[2])
            child_edges += [(p[1], m), (m, p[2])]
            child_whole += [p[4], p[5]]
        ce = np.array(child_edges)
        fine, err, left, right = evaluate(ce, np.array(child_whole))
        kept += [
            [float(err[i]), ce[i, 0], ce[i, 1], float(fine[i]), float(left[i]), float(right[i])]
            for i in range(len(ce))
        ]
        panels = kept
        subdivisions += len(marked)
    panels.sort(key=lambda p: p[1])
    value = math.fsum(p[3] for p in panels)
    error = math.fsum(p[0] for p in panels)
    if not converged:
        warnings.warn(
            f"quadrature on [{lo}, {hi}] stopped at estimated error {error:.3g} "
            f"with {len(panels)} panels",
            QuadratureWarning,
            stacklevel=2,
        )
    if not full_output:
        return value
    info = QuadratureInfo(
        value=value,
        error=error,
        panels=len(panels),
        subdivisions=subdivisions,
        evaluations=evaluations,
        converged=converged,
        intervals=[(p[1], p[2]) for p in panels],
    )
    return value, info

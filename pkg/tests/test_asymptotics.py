import math

import mpmath
import numpy as np
import pytest

from intervalscore.asymptotics import asym_eis, asym_ew, asym_ewis, reference
from intervalscore.evaluation import LevelWeights, expected_interval_score
from intervalscore.intervals import BinomialSetting, MethodId

# Frozen values: closed forms evaluated in mpmath at 30 digits.
ASYM_EW_05_50 = 0.27718076486993554
ASYM_EIS_05_50 = 0.33061524148849303
ASYM_EWIS_05_50 = 1.031310178196189
ASYM_EIS_05_1 = 2.337802792201414


def truncated_normal_eis(pi: float, n: int, gamma: float) -> float:
    """2 q sigma + 2 E[Y | Y > 0] for Y ~ N(-q sigma, sigma^2), by numerical integration."""
    mpmath.mp.dps = 30
    sigma = mpmath.sqrt(mpmath.mpf(pi) * (1 - mpmath.mpf(pi)) / n)
    q = mpmath.sqrt(2) * mpmath.erfinv(mpmath.mpf(gamma))
    mu = -q * sigma
    dens = lambda y: mpmath.npdf(y, mu, sigma)  # noqa: E731
    upper = mu + 40 * sigma
    tail = mpmath.quad(dens, [0, upper])
    first = mpmath.quad(lambda y: y * dens(y), [0, upper])
    return float(2 * q * sigma + 2 * first / tail)


def test_zero_at_boundaries():
    for g in (0.9, 0.95):
        assert asym_ew(0.0, 10, g) == 0.0
        assert asym_eis(0.0, 10, g) == 0.0
        assert asym_eis(1.0, 7, g) == 0.0
    three = LevelWeights.from_lists([0.9, 0.95, 0.99])
    assert asym_ewis(0.0, 50, three) == 0.0


def test_closed_form_values():
    assert asym_ew(0.5, 50, 0.95) == pytest.approx(ASYM_EW_05_50, abs=1e-14)
    assert asym_ew(0.5, 50, 0.95) == pytest.approx(0.27718, abs=5e-6)
    assert asym_eis(0.5, 50, 0.95) == pytest.approx(ASYM_EIS_05_50, abs=1e-14)
    assert asym_eis(0.5, 50, 0.95) == pytest.approx(0.3305, abs=1e-3)
    assert asym_eis(0.5, 1, 0.95) == pytest.approx(ASYM_EIS_05_1, abs=1e-13)


def test_asym_ewis():
    three = LevelWeights.from_lists([0.9, 0.95, 0.99], [1, 1, 1])
    direct = sum(asym_eis(0.5, 50, g) for g in (0.9, 0.95, 0.99))
    assert asym_ewis(0.5, 50, three) == pytest.approx(direct, abs=1e-15)
    assert asym_ewis(0.5, 50, three) == pytest.approx(ASYM_EWIS_05_50, abs=1e-13)
    one = LevelWeights.from_lists([0.95], [1])
    assert asym_ewis(0.3, 20, one) == asym_eis(0.3, 20, 0.95)


def test_reference_record():
    r = reference(0.3, 40, 0.9)
    assert r.sigma == pytest.approx(math.sqrt(0.21 / 40), rel=1e-15)
    assert r.asym_eis >= r.asym_ew >= 0


def test_vectorized():
    pis = np.linspace(0, 1, 11)
    v = asym_eis(pis, 10, 0.95)
    assert v.shape == (11,)
    assert v[3] == asym_eis(float(pis[3]), 10, 0.95)


@pytest.mark.parametrize("gamma", [0.8, 0.9, 0.95, 0.99])
def test_concave_in_pi(gamma):
    grid = np.linspace(0, 1, 401)
    for f in (asym_ew, asym_eis):
        v = f(grid, 25, gamma)
        assert np.all(np.diff(v, 2) <= 1e-12)


@pytest.mark.parametrize("pi", [0.02, 0.2, 0.5, 0.81])
@pytest.mark.parametrize("n", [1, 10, 250])
@pytest.mark.parametrize("gamma", [0.8, 0.95, 0.99])
def test_truncated_normal_identity(pi, n, gamma):
    assert asym_eis(pi, n, gamma) == pytest.approx(truncated_normal_eis(pi, n, gamma), abs=1e-8)


def test_wilson_converges_to_reference():
    gaps = []
    for n in (100, 1000, 10000):
        s = BinomialSetting(n, 0.95)
        gaps.append(abs(expected_interval_score(MethodId.WILSON, s, 0.5) - asym_eis(0.5, n, 0.95)))
    assert gaps[0] > gaps[1] > gaps[2]


def test_domain():
    with pytest.raises(ValueError):
        asym_eis(1.5, 10, 0.95)
    with pytest.raises(ValueError):
        asym_ew(0.5, 0, 0.95)

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from intervalscore.intervals import (
    BinomialSetting,
    IntervalEstimate,
    MethodId,
    agresti_coull,
    all_endpoints,
    arcsine_wald,
    clopper_pearson,
    compute_interval,
    equal_tailed,
    hpd,
    interval_table,
    likelihood_ratio,
    lr_deviance,
    parse_methods,
    rindskopf,
    wald,
    wilson,
)
from intervalscore.numerics import beta_pdf, chi2_quantile_df1, reg_inc_beta
from intervalscore.oracle import beta_quantile_bisect, hpd_grid_search

S10 = BinomialSetting(10, 0.95)
COVID_SENS = BinomialSetting(39, 0.95)
COVID_SPEC = BinomialSetting(248, 0.95)

# Frozen oracle values.
#   Rindskopf / arcsine / Agresti-Coull / Wilson: hand evaluation of the
#     closed forms in mpmath at 30 digits.
#   Likelihood ratio x=1: dense scan (2e6 points) of the deviance.
#   Uniform HPD x=2: brute-force width minimization over lower-tail masses.
RINDSKOPF_X0 = (0.0027826694935295057, 0.4483135802526691)
ARCSINE_X0_UPPER = 0.09300123349835374
AC_X0_RAW = (-0.04044251670493989, 0.3261568024192256)
WILSON_X5 = (0.23659309051256402, 0.763406909487436)
LR_X1_SCAN = (0.0059915, 0.3716355)
UHPD_X2_SCAN = (0.0405553, 0.4837238)
JEFFREYS_ET_X0 = (4.7890433157581896e-05, 0.2171962675092105)

ALL = list(MethodId)


def setting_strategy():
    return st.builds(
        BinomialSetting,
        n=st.integers(1, 120),
        gamma=st.sampled_from([0.8, 0.9, 0.95, 0.99]),
    )


def test_binomial_setting():
    s = BinomialSetting(10, 0.95)
    assert s.alpha == pytest.approx(0.05, abs=1e-15)
    assert s.q_alpha == pytest.approx(1.959963984540054, abs=1e-13)
    for bad in [(0, 0.95), (10, 0.0), (10, 1.0)]:
        with pytest.raises(ValueError):
            BinomialSetting(*bad)


def test_parse_methods():
    assert parse_methods("wald,wilson") == [MethodId.WALD, MethodId.WILSON]
    with pytest.raises(ValueError, match="clopper-pearson"):
        parse_methods("bogus")


@pytest.mark.parametrize("x", [-1, 11])
def test_x_out_of_range(x):
    with pytest.raises(ValueError):
        compute_interval(MethodId.WILSON, x, S10)


# ---- per-method examples -------------------------------------------------


def test_wald_examples():
    iv = wald(29, COVID_SENS)
    assert (round(iv.lower, 3), round(iv.upper, 3)) == (0.607, 0.881)
    iv = wald(246, COVID_SPEC)
    assert iv.raw_upper == pytest.approx(1.003, abs=5e-4)
    assert iv.upper == 1.0
    iv = wald(0, S10)
    assert (iv.lower, iv.upper) == (0.0, 0.0)


def test_rindskopf_examples():
    iv = rindskopf(5, S10)
    assert iv.lower == pytest.approx(1 - iv.upper, abs=1e-14)
    iv = rindskopf(0, S10)
    assert (iv.lower, iv.upper) == pytest.approx(RINDSKOPF_X0, abs=1e-13)
    assert (iv.lower, iv.upper) == pytest.approx((0.0028, 0.448), abs=5e-4)


def test_arcsine_examples():
    iv = arcsine_wald(0, S10)
    assert iv.lower == 0.0
    assert iv.upper == pytest.approx(math.sin(1.959963984540054 / math.sqrt(40)) ** 2, abs=1e-14)
    assert iv.upper == pytest.approx(ARCSINE_X0_UPPER, abs=1e-14)
    mid = arcsine_wald(5, S10)
    assert mid.lower == pytest.approx(1 - mid.upper, abs=1e-14)
    top = arcsine_wald(10, S10)
    assert (top.lower, top.upper) == pytest.approx((1 - ARCSINE_X0_UPPER, 1.0), abs=1e-14)


def test_wilson_examples():
    iv = wilson(29, COVID_SENS)
    assert (round(iv.lower, 3), round(iv.upper, 3)) == (0.589, 0.854)
    iv = wilson(246, COVID_SPEC)
    assert (round(iv.lower, 3), round(iv.upper, 3)) == (0.971, 0.998)
    iv = wilson(5, S10)
    assert (iv.lower, iv.upper) == pytest.approx(WILSON_X5, abs=1e-14)


def test_agresti_coull_examples():
    iv = agresti_coull(0, S10)
    assert (iv.raw_lower, iv.raw_upper) == pytest.approx(AC_X0_RAW, abs=1e-14)
    assert iv.lower == 0.0 and iv.upper == pytest.approx(AC_X0_RAW[1], abs=1e-14)
    mid = agresti_coull(5, S10)
    assert mid.lower == pytest.approx(1 - mid.upper, abs=1e-14)
    three = agresti_coull(3, S10)
    assert 0.5 * (three.raw_lower + three.raw_upper) == pytest.approx(5 / 14, abs=1e-15)


def test_likelihood_ratio_examples():
    chi = chi2_quantile_df1(0.95)
    iv = likelihood_ratio(0, S10)
    assert iv.lower == 0.0
    assert iv.upper == pytest.approx(1 - math.exp(-chi / 20), abs=1e-14)
    assert iv.upper == pytest.approx(0.17475, abs=5e-6)
    mid = likelihood_ratio(5, S10)
    assert mid.lower == pytest.approx(1 - mid.upper, abs=1e-12)
    one = likelihood_ratio(1, S10)
    assert (one.lower, one.upper) == pytest.approx(LR_X1_SCAN, abs=1e-6)


def test_clopper_pearson_examples():
    iv = clopper_pearson(29, COVID_SENS)
    assert (round(iv.lower, 3), round(iv.upper, 3)) == (0.579, 0.870)
    iv = clopper_pearson(246, COVID_SPEC)
    assert (round(iv.lower, 3), round(iv.upper, 3)) == (0.971, 0.999)
    iv = clopper_pearson(0, S10)
    assert iv.lower == 0.0
    assert iv.upper == pytest.approx(1 - 0.025**0.1, abs=1e-14)
    assert iv.upper == pytest.approx(0.30850, abs=5e-6)


def test_equal_tailed_examples():
    iv = equal_tailed(0, S10, "uniform")
    assert (iv.lower, iv.upper) == pytest.approx(
        (1 - 0.975 ** (1 / 11), 1 - 0.025 ** (1 / 11)), abs=1e-14
    )
    # five-decimal display check; the closed form above is the real oracle
    assert (iv.lower, iv.upper) == pytest.approx((0.00230, 0.28491), abs=5e-6)
    iv = equal_tailed(0, S10, "jeffreys")
    assert iv.lower == pytest.approx(JEFFREYS_ET_X0[0], rel=1e-10)
    assert iv.upper == pytest.approx(JEFFREYS_ET_X0[1], abs=1e-12)
    assert iv.upper == pytest.approx(beta_quantile_bisect(0.5, 10.5, 0.975), abs=1e-11)
    assert iv.lower == pytest.approx(beta_quantile_bisect(0.5, 10.5, 0.025), abs=1e-11)


def test_hpd_examples():
    iv = hpd(0, S10, "uniform")
    assert iv.lower == 0.0
    assert iv.upper == pytest.approx(1 - 0.05 ** (1 / 11), abs=1e-14)
    assert iv.upper == pytest.approx(0.23840, abs=5e-6)
    five, et5 = hpd(5, S10, "uniform"), equal_tailed(5, S10, "uniform")
    assert (five.lower, five.upper) == pytest.approx((et5.lower, et5.upper), abs=1e-12)
    two, et2 = hpd(2, S10, "uniform"), equal_tailed(2, S10, "uniform")
    assert two.width < et2.width
    assert (two.lower, two.upper) == pytest.approx(UHPD_X2_SCAN, abs=2e-6)


def test_compute_interval_dispatch():
    assert compute_interval(MethodId.WILSON, 29, COVID_SENS) == wilson(29, COVID_SENS)
    assert compute_interval("clopper-pearson", 0, S10) == clopper_pearson(0, S10)
    with pytest.raises(ValueError):
        compute_interval("bogus", 0, S10)


@pytest.mark.parametrize("method", ALL)
def test_all_methods_symmetric_at_half(method):
    iv = compute_interval(method, 5, S10)
    assert iv.lower == pytest.approx(1 - iv.upper, abs=1e-10)
    assert isinstance(iv, IntervalEstimate)


def test_all_endpoints_examples():
    s1 = BinomialSetting(1, 0.95)
    assert all_endpoints(MethodId.WALD, s1) == []
    assert all_endpoints(MethodId.CLOPPER_PEARSON, s1) == pytest.approx([0.025, 0.975], abs=1e-15)


@pytest.mark.parametrize("method", ALL)
@pytest.mark.parametrize("n", [1, 7, 30])
def test_all_endpoints_mirror_and_sorted(method, n):
    pts = all_endpoints(method, BinomialSetting(n, 0.9))
    assert pts == sorted(pts)
    assert all(0.0 < t < 1.0 for t in pts)
    mirrored = sorted(1.0 - t for t in pts)
    assert np.allclose(pts, mirrored, atol=1e-10)


def test_interval_table_read_only():
    lower, upper = interval_table(MethodId.WILSON, S10)
    assert lower.shape == (11,)
    with pytest.raises(ValueError):
        lower[0] = 0.5


# ---- invariants ----------------------------------------------------------


@given(method=st.sampled_from(ALL), setting=setting_strategy(), data=st.data())
@settings(max_examples=400, deadline=None)
def test_limits_ordered_and_mirrored(method, setting, data):
    x = data.draw(st.integers(0, setting.n))
    iv = compute_interval(method, x, setting)
    assert 0.0 <= iv.lower <= iv.upper <= 1.0
    other = compute_interval(method, setting.n - x, setting)
    assert other.lower == pytest.approx(1 - iv.upper, abs=1e-10)
    assert other.upper == pytest.approx(1 - iv.lower, abs=1e-10)


@pytest.mark.parametrize("prior,ab", [("uniform", 1.0), ("jeffreys", 0.5)])
@pytest.mark.parametrize("n", [1, 10, 57])
@pytest.mark.parametrize("gamma", [0.9, 0.99])
def test_equal_tailed_is_central(prior, ab, n, gamma):
    s = BinomialSetting(n, gamma)
    for x in range(n + 1):
        a, b = x + ab, n - x + ab
        iv = equal_tailed(x, s, prior)
        assert reg_inc_beta(a, b, iv.lower) == pytest.approx(s.alpha / 2, abs=1e-10)
        assert 1 - reg_inc_beta(a, b, iv.upper) == pytest.approx(s.alpha / 2, abs=1e-10)


@pytest.mark.parametrize("prior,ab", [("uniform", 1.0), ("jeffreys", 0.5)])
@pytest.mark.parametrize("n", [1, 4, 10, 33, 100])
@pytest.mark.parametrize("gamma", [0.8, 0.95, 0.99])
def test_hpd_mass_and_density_balance(prior, ab, n, gamma):
    s = BinomialSetting(n, gamma)
    for x in range(n + 1):
        a, b = x + ab, n - x + ab
        iv = hpd(x, s, prior)
        mass = reg_inc_beta(a, b, iv.upper) - reg_inc_beta(a, b, iv.lower)
        assert mass == pytest.approx(gamma, abs=1e-9)
        if 0 < iv.lower and iv.upper < 1:
            gap = beta_pdf(a, b, iv.lower) - beta_pdf(a, b, iv.upper)
            assert abs(gap) <= 1e-7 * beta_pdf(a, b, iv.lower)


@pytest.mark.parametrize("prior,ab", [("uniform", 1.0), ("jeffreys", 0.5)])
@pytest.mark.parametrize("x", [1, 2, 3, 4])
def test_hpd_minimal_against_grid_search(prior, ab, x):
    s = BinomialSetting(8, 0.95)
    iv = hpd(x, s, prior)
    lo, hi = hpd_grid_search(x + ab, 8 - x + ab, 0.95, grid_size=401)
    # the grid can only be as good as, never better than, the exact optimum
    assert iv.width <= (hi - lo) + 1e-12
    assert iv.width == pytest.approx(hi - lo, abs=1e-4)


@pytest.mark.parametrize("n", [1, 2, 10, 39, 248])
@pytest.mark.parametrize("gamma", [0.9, 0.95, 0.99])
def test_lr_limits_on_deviance_threshold(n, gamma):
    s = BinomialSetting(n, gamma)
    chi = chi2_quantile_df1(gamma)
    for x in range(1, n):
        iv = likelihood_ratio(x, s)
        assert lr_deviance(iv.lower, x, n) == pytest.approx(chi, abs=1e-8)
        assert lr_deviance(iv.upper, x, n) == pytest.approx(chi, abs=1e-8)


def test_clopper_pearson_contains_wilson_sensitivity():
    cp, wi = clopper_pearson(29, COVID_SENS), wilson(29, COVID_SENS)
    assert cp.lower <= wi.lower and wi.upper <= cp.upper


@pytest.mark.parametrize("x,s", [(29, COVID_SENS), (246, COVID_SPEC)])
def test_clopper_pearson_contains_wilson_at_display_precision(x, s):
    cp, wi = clopper_pearson(x, s), wilson(x, s)
    pct = lambda v: round(100 * v, 1)  # noqa: E731
    assert pct(cp.lower) <= pct(wi.lower) and pct(wi.upper) <= pct(cp.upper)


def test_clopper_pearson_lower_exceeds_wilson_at_246_of_248():
    # Containment fails at full precision here: both print as 97.1, but the
    # exact Beta(246, 3) quantile sits about 1e-4 above the Wilson limit
    # (cross-checked against scipy.stats.beta.ppf).
    cp, wi = clopper_pearson(246, COVID_SPEC), wilson(246, COVID_SPEC)
    assert cp.lower == pytest.approx(0.971173450249377, abs=1e-12)
    assert wi.lower == pytest.approx(0.9710778853059633, abs=1e-12)
    assert cp.lower > wi.lower


@pytest.mark.parametrize("method", ALL)
def test_truncation_keeps_raw(method):
    for x in range(11):
        iv = compute_interval(method, x, S10)
        assert iv.lower == min(max(iv.raw_lower, 0.0), 1.0)
        assert iv.upper == min(max(iv.raw_upper, 0.0), 1.0)


def test_large_n_stays_finite():
    s = BinomialSetting(5000, 0.99)
    for method in ALL:
        for x in (0, 1, 2500, 4999, 5000):
            iv = compute_interval(method, x, s)
            assert 0.0 <= iv.lower <= iv.upper <= 1.0

import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from ndcrisk import (GarchParams, PortfolioSpec, RiskWarning, VarEstimate, VarMethod,
                     aggregate_portfolio_sigma, component_var, evt_var, fhs_var, filter_garch,
                     fit_garch, fit_gpd_tail, garch_evt_var, historical_var, kupiec_test,
                     parametric_var, rolling_backtest, simulate_garch)
from ndcrisk.exceptions import NotPositiveSemidefinite
from ndcrisk.var import (RiskCategory, GpdTailFit, empirical_quantile, fhs_estimator,
                         gpd_tail_quantile, historical_estimator, parametric_estimator)

LEVELS = st.floats(0.5, 0.999)


def sorted_interpolation_quantile(x, q):
    """Independent oracle: order statistics at plotting positions (k - 1)/(n - 1)."""
    s = sorted(x)
    pos = q * (len(s) - 1)
    lo = math.floor(pos)
    hi = min(lo + 1, len(s) - 1)
    return s[lo] + (pos - lo) * (s[hi] - s[lo])


# --- estimates --------------------------------------------------------------------

def test_var_estimate_validation():
    for value in (-0.1, math.inf, math.nan):
        with pytest.raises(ValueError):
            VarEstimate(0.99, value, VarMethod.HISTORICAL)
    for level in (0.0, 1.0, 1.5):
        with pytest.raises(ValueError):
            VarEstimate(level, 0.1, VarMethod.HISTORICAL)
    assert len(RiskCategory) == 10
    assert VarEstimate(0.99, 0.1, "fhs").to_dict()["method"] == "fhs"


def test_parametric_examples():
    assert parametric_var(0.0, 0.01, 0.99).value == pytest.approx(0.0232635, abs=5e-8)
    assert parametric_var(0.0, 0.01, 0.99).value == pytest.approx(0.01 * 2.3263478740408408, rel=1e-14)
    assert parametric_var(0.01, 0.0, 0.99).value == 0.0
    assert parametric_var(0.0, 0.3, 0.5).value == 0.0
    with pytest.raises(ValueError):
        parametric_var(0.0, -0.1, 0.99)


def test_historical_examples():
    assert historical_var(np.full(150, 0.01), 0.99).value == 0.0
    x = np.round(np.arange(-50, 50) * 0.01, 2)
    got = historical_var(x, 0.99).value
    assert got == pytest.approx(-sorted_interpolation_quantile(x.tolist(), 0.01), abs=1e-15)
    assert got == pytest.approx(0.4901, abs=1e-12)


def test_historical_duplication_on_even_grid():
    x = np.round(np.arange(-50, 50) * 0.01, 2)
    doubled = np.repeat(x, 2)
    assert historical_var(doubled, 0.99).value == pytest.approx(historical_var(x, 0.99).value, abs=1e-12)


def test_historical_length_rules():
    with pytest.raises(ValueError, match="series too short"):
        historical_var(np.zeros(19), 0.99)
    with pytest.warns(RiskWarning):
        historical_var(np.linspace(-1, 1, 50), 0.99)


@given(st.lists(st.floats(-1, 1), min_size=2, max_size=200), st.floats(0, 1))
def test_quantile_convention(x, q):
    assert empirical_quantile(x, q) == pytest.approx(sorted_interpolation_quantile(x, q), abs=1e-12)


@given(st.lists(st.floats(-0.5, 0.5), min_size=100, max_size=300), LEVELS, LEVELS)
def test_level_monotonicity_historical(x, l1, l2):
    l1, l2 = sorted((l1, l2))
    a, b = historical_var(x, l1).value, historical_var(x, l2).value
    assert a >= 0 and a <= b + 1e-15


@given(st.floats(-0.1, 0.1), st.floats(0, 0.5), LEVELS, LEVELS)
def test_level_monotonicity_parametric(mu, sigma, l1, l2):
    l1, l2 = sorted((l1, l2))
    assert parametric_var(mu, sigma, l1).value <= parametric_var(mu, sigma, l2).value


# --- filtered historical simulation ---------------------------------------------------------

@pytest.fixture(scope="module")
def garch_sample():
    r, _ = simulate_garch(GarchParams(2e-6, 0.08, 0.90), 3000, seed=17)
    return r


def test_fhs_constant_volatility_identity():
    rng = np.random.default_rng(8)
    r = 0.02 * rng.standard_normal(500)
    sigma2 = 0.0004
    fit = filter_garch(r, GarchParams(sigma2, 0.0, 0.0), seed_variance=sigma2)
    expected = historical_var(r, 0.99).value * math.sqrt(fit.params.omega) / math.sqrt(sigma2)
    assert fhs_var(r, fit, 0.99).value == pytest.approx(expected, abs=1e-10)


def test_fhs_all_positive_residuals():
    r = np.abs(np.random.default_rng(1).standard_normal(200)) + 0.01
    fit = filter_garch(r, GarchParams(1.0, 0.05, 0.9), seed_variance=1.0)
    assert fhs_var(r, fit, 0.99).value == 0.0


def test_fhs_preconditions(garch_sample):
    fit = filter_garch(garch_sample, GarchParams(2e-6, 0.08, 0.90))
    with pytest.raises(ValueError):
        fhs_var(garch_sample.returns[:-1], fit, 0.99)
    short = garch_sample.returns[:80]
    with pytest.raises(ValueError, match="too short"):
        fhs_var(short, filter_garch(short, GarchParams(2e-6, 0.08, 0.90)), 0.99)


def test_fhs_backtest_calibration(garch_sample):
    params = fit_garch(garch_sample.returns[:500]).params
    res = rolling_backtest(garch_sample, fhs_estimator(params, 0.99), 500, 0.99)
    lo, hi = res.binomial_band()
    assert lo <= res.violations <= hi


def test_fhs_monotone_in_level(garch_sample):
    fit = fit_garch(garch_sample)
    values = [fhs_var(garch_sample, fit, lv).value for lv in (0.9, 0.95, 0.975, 0.99, 0.995)]
    assert values == sorted(values)


# --- extreme value tail ---------------------------------------------------------------

def _gpd_sample(xi, n, seed):
    u = np.random.default_rng(seed).uniform(size=n)
    return stats.genpareto.ppf(u, xi, scale=1.0)


def test_gpd_recovers_exponential():
    # exceedances over the 50% threshold of Exp(1) are Exp(1) again
    y = np.random.default_rng(12).exponential(size=20_000)
    tail = fit_gpd_tail(y, threshold_quantile=0.5)
    assert tail.n_exceed == 10_000
    assert abs(tail.xi) <= 0.05 and abs(tail.beta_gpd - 1.0) <= 0.05


def test_gpd_recovers_shape():
    # a threshold at a point mass at 0 leaves the 10,000 GPD draws as exceedances
    y = np.r_[np.zeros(10_001), _gpd_sample(0.3, 10_000, seed=4)]
    tail = fit_gpd_tail(y, threshold_quantile=0.5)
    assert tail.threshold == 0.0 and tail.n_exceed == 10_000
    assert abs(tail.xi - 0.3) <= 0.05
    assert tail.converged


def test_gpd_refuses_few_exceedances():
    with pytest.raises(ValueError, match="exceedances"):
        fit_gpd_tail(np.arange(50.0), threshold_quantile=0.9)
    with pytest.raises(ValueError):
        GpdTailFit(2.0, 0.0, 1.0, 1000, 9, 0.9)


def test_evt_examples():
    tail = GpdTailFit(threshold=2.0, xi=0.0, beta_gpd=1.0, n=1000, n_exceed=100, threshold_quantile=0.9)
    assert gpd_tail_quantile(tail, 0.99) == pytest.approx(2 + math.log(10), abs=1e-12)
    assert gpd_tail_quantile(tail, 0.99) == pytest.approx(4.302585, abs=1e-6)
    assert gpd_tail_quantile(tail, 0.9) == pytest.approx(2.0, abs=1e-12)
    heavy = GpdTailFit(2.0, 0.2, 1.0, 1000, 100, 0.9)
    assert gpd_tail_quantile(heavy, 0.99) > gpd_tail_quantile(tail, 0.99)
    assert evt_var(tail, 0.01, 0.0, 0.99).value == pytest.approx(0.01 * (2 + math.log(10)), rel=1e-14)
    with pytest.raises(ValueError):
        gpd_tail_quantile(tail, 0.8)


def test_garch_evt_var_reasonable(garch_sample):
    fit = fit_garch(garch_sample)
    evt = garch_evt_var(garch_sample, fit, 0.99).value
    fhs = fhs_var(garch_sample, fit, 0.99).value
    assert evt > 0 and 0.7 < evt / fhs < 1.3


# --- Kupiec test ---------------------------------------------------------------------

def test_kupiec_examples():
    res = kupiec_test(10, 1000, 0.99)
    assert res.lr_statistic == pytest.approx(0.0, abs=1e-12)
    assert res.p_value == pytest.approx(1.0, abs=1e-6)
    res = kupiec_test(5, 250, 0.99)
    # direct evaluation of the likelihood-ratio formula
    direct = -2 * (245 * math.log(0.99) + 5 * math.log(0.01) - 245 * math.log(0.98) - 5 * math.log(0.02))
    assert res.lr_statistic == pytest.approx(direct, rel=1e-12)
    assert res.lr_statistic == pytest.approx(1.956810, abs=1e-6)
    assert res.p_value == pytest.approx(stats.chi2.sf(direct, 1), rel=1e-12)
    assert not res.reject_at_5pct
    res = kupiec_test(0, 250, 0.99)
    assert res.lr_statistic == pytest.approx(-2 * 250 * math.log(0.99), rel=1e-12)
    assert res.lr_statistic == pytest.approx(5.0252, abs=1e-4)
    assert res.reject_at_5pct


@given(st.integers(1, 2000), st.data(), st.sampled_from([0.9, 0.95, 0.99, 0.995]))
def test_kupiec_invariants(n, data, level):
    x = data.draw(st.integers(0, n))
    res = kupiec_test(x, n, level)
    assert res.lr_statistic >= 0 and 0 <= res.p_value <= 1
    if abs(x / n - (1 - level)) > 1e-6:
        assert res.lr_statistic > 0


def test_kupiec_rejects_bad_counts():
    with pytest.raises(ValueError):
        kupiec_test(11, 10, 0.99)
    with pytest.raises(ValueError):
        kupiec_test(0, 0, 0.99)


# --- rolling backtest -------------------------------------------------------------------

def test_backtest_parametric_true_sigma():
    r = 0.01 * np.random.default_rng(21).standard_normal(5000)
    res = rolling_backtest(r, parametric_estimator(0.99, mu=0.0, sigma=0.01), 250, 0.99)
    lo, hi = res.binomial_band()
    assert res.n == 4750 and lo <= res.violations <= hi


def test_backtest_constant_returns():
    r = np.full(400, -0.001)
    res = rolling_backtest(r, lambda w: 0.01, 100, 0.99)
    assert res.violations == 0


def test_backtest_ties_survive():
    r = np.full(200, -0.01)
    assert rolling_backtest(r, lambda w: 0.01, 50, 0.99).violations == 0
    assert rolling_backtest(r, lambda w: 0.0099, 50, 0.99).violations == 150


def test_backtest_rejects_infinite_sentinel():
    with pytest.raises(ValueError, match="invalid VaR"):
        rolling_backtest(np.zeros(200), lambda w: math.inf, 50, 0.99)
    with pytest.raises(ValueError, match="too large"):
        rolling_backtest(np.zeros(60), lambda w: 0.1, 50, 0.99)


def test_backtest_log_and_workers(tmp_path):
    r = 0.01 * np.random.default_rng(2).standard_normal(800)
    est = historical_estimator(0.95)
    one = rolling_backtest(r, est, 200, 0.95)
    many = rolling_backtest(r, est, 200, 0.95, workers=4)
    assert one == many
    np.testing.assert_array_equal(one.log.var_values, many.log.var_values)
    np.testing.assert_array_equal(one.log.index, np.arange(200, 800))
    one.log.write_csv(tmp_path / "a.csv")
    many.log.write_csv(tmp_path / "b.csv")
    a = (tmp_path / "a.csv").read_bytes()
    assert a == (tmp_path / "b.csv").read_bytes()
    lines = a.decode().splitlines()
    assert lines[0] == "index,return,var_value,violation" and len(lines) == 601
    assert sum(int(l.rsplit(",", 1)[1]) for l in lines[1:]) == one.violations
    assert set(one.to_dict()) == {"n", "violations", "lr", "p_value", "reject_at_5pct"}


# --- portfolio aggregation ------------------------------------------------------------------

def _two(rho, w=(0.5, 0.5), s=(0.2, 0.2)):
    return PortfolioSpec(w, s, [[1.0, rho], [rho, 1.0]])


def test_aggregation_examples():
    assert aggregate_portfolio_sigma(_two(1.0)) == pytest.approx(0.2, abs=1e-15)
    assert aggregate_portfolio_sigma(_two(-1.0)) == pytest.approx(0.0, abs=1e-9)
    assert aggregate_portfolio_sigma(_two(0.0)) == pytest.approx(0.2 / math.sqrt(2), abs=1e-15)


def test_component_examples():
    one = PortfolioSpec([1.0], [0.3], [[1.0]])
    assert component_var(one, 0.05)[0] == pytest.approx(0.05, rel=1e-15)
    np.testing.assert_allclose(component_var(_two(1.0), 1.0), [0.5, 0.5], rtol=1e-15)
    c = component_var(_two(0.0, (0.7, 0.3), (0.2, 0.1)), 1.0)
    np.testing.assert_allclose(c, [0.0196 / 0.0205, 0.0009 / 0.0205], rtol=1e-14)
    assert c == pytest.approx(_finite_difference_contributions(_two(0.0, (0.7, 0.3), (0.2, 0.1)), 1.0), rel=1e-6)


def _finite_difference_contributions(spec, total, h=1e-6):
    w = np.array(spec.weights)
    cov = spec.covariance

    def sigma(v):
        return math.sqrt(v @ cov @ v)

    s = sigma(w)
    grad = np.empty(len(w))
    for i in range(len(w)):
        up, dn = w.copy(), w.copy()
        up[i] += h
        dn[i] -= h
        grad[i] = (sigma(up) - sigma(dn)) / (2 * h)
    return total * w * grad / s


def _random_corr(rng, n):
    a = rng.standard_normal((n, n + 2))
    c = a @ a.T
    d = np.sqrt(np.diag(c))
    c = c / np.outer(d, d)
    c = (c + c.T) / 2
    np.fill_diagonal(c, 1.0)
    return c


def test_portfolio_validation():
    with pytest.raises(ValueError):
        PortfolioSpec([0.5, 0.4], [0.1, 0.1], np.eye(2))
    with pytest.raises(ValueError):
        PortfolioSpec([0.5, 0.5], [0.1, 0.1], [[1, 0.3], [0.2, 1]])
    with pytest.raises(ValueError):
        PortfolioSpec([0.5, 0.5], [0.1, 0.1], [[1, 1.2], [1.2, 1]])
    with pytest.raises(ValueError):
        PortfolioSpec([0.5, 0.5], [0.1], np.eye(2))
    bad = PortfolioSpec([1 / 3] * 3, [0.1] * 3, [[1, 0.9, -0.9], [0.9, 1, 0.9], [-0.9, 0.9, 1]])
    with pytest.raises(NotPositiveSemidefinite):
        aggregate_portfolio_sigma(bad)
    with pytest.raises(ValueError):
        component_var(PortfolioSpec([1.0], [0.0], [[1.0]]), 1.0)


@given(st.integers(0, 2**32 - 1), st.integers(2, 6))
def test_diversification_bound(seed, n):
    rng = np.random.default_rng(seed)
    w = rng.dirichlet(np.ones(n))
    s = rng.uniform(0.05, 0.5, n)
    spec = PortfolioSpec(w, s, _random_corr(rng, n))
    assert aggregate_portfolio_sigma(spec) <= float(w @ s) * (1 + 1e-12)
    full = PortfolioSpec(w, s, np.ones((n, n)))
    assert aggregate_portfolio_sigma(full) == pytest.approx(float(w @ s), rel=1e-12)


@given(st.integers(0, 2**32 - 1), st.floats(0.001, 10.0))
def test_euler_property(seed, total):
    rng = np.random.default_rng(seed)
    spec = PortfolioSpec(rng.dirichlet(np.ones(5)), rng.uniform(0.05, 0.5, 5), _random_corr(rng, 5))
    c = component_var(spec, total)
    assert abs(c.sum() - total) <= 1e-12 * max(1.0, total)
    np.testing.assert_allclose(c, _finite_difference_contributions(spec, total), rtol=1e-4, atol=1e-12)

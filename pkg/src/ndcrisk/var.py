"""
Value-at-Risk estimation, backtesting and portfolio risk.

All VaR figures are positive loss fractions; a computed quantile on the gain
side is clamped to zero. Empirical quantiles use linear interpolation between
order statistics at plotting position ``(k - 1) / (n - 1)`` (numpy's
``"linear"`` method), everywhere in the package.
"""

from __future__ import annotations

import csv
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize
from scipy.special import ndtri
from scipy.stats import binom, chi2

from .exceptions import NotPositiveSemidefinite, RiskWarning
from .market_data import as_array
from .volatility import GarchFit, GarchParams, filter_garch, forecast_variance

PSD_TOLERANCE = -1e-10
XI_ZERO = 1e-6
MIN_EXCEEDANCES = 10


class VarMethod(str, Enum):
    PARAMETRIC_NORMAL = "parametric_normal"
    HISTORICAL = "historical"
    FHS = "fhs"
    EVT_GPD = "evt_gpd"
    MONTE_CARLO = "monte_carlo"


class RiskCategory(str, Enum):
    """Risk taxonomy carried as report metadata only."""

    MARKET = "market"
    CREDIT = "credit"
    OPERATIONAL = "operational"
    ROLLOVER = "rollover"
    TRANSACTION = "transaction"
    FOREIGN_EXCHANGE = "foreign_exchange"
    REPUTATION = "reputation"
    EMERGING_MARKETS = "emerging_markets"
    ENVIRONMENTAL = "environmental"
    GEOPOLITICAL = "geopolitical"


def _check_level(level: float) -> float:
    level = float(level)
    if not 0.0 < level < 1.0:
        raise ValueError(f"confidence level must lie in (0, 1), got {level}")
    return level


@dataclass(frozen=True)
class VarEstimate:
    level: float
    value: float
    method: VarMethod
    horizon_periods: int = 1
    as_of_index: int | None = None
    category: RiskCategory = RiskCategory.MARKET

    def __post_init__(self):
        _check_level(self.level)
        if not math.isfinite(self.value) or self.value < 0:
            raise ValueError(f"VaR value must be finite and >= 0, got {self.value}")
        if int(self.horizon_periods) < 1:
            raise ValueError("horizon_periods must be >= 1")
        object.__setattr__(self, "method", VarMethod(self.method))

    def to_dict(self) -> dict:
        return {
            "level": self.level,
            "value": self.value,
            "method": self.method.value,
            "horizon_periods": self.horizon_periods,
            "as_of_index": self.as_of_index,
            "category": self.category.value,
        }


def empirical_quantile(x, q: float) -> float:
    """Inclusive linear-interpolation quantile of ``x`` at probability ``q``."""
    return float(np.quantile(np.asarray(x, dtype=float), q, method="linear"))


def normal_quantile(p: float) -> float:
    return float(ndtri(p))


def parametric_var(mu: float, sigma: float, level: float) -> VarEstimate:
    """Gaussian VaR ``max(0, sigma * z_level - mu)``."""
    level = _check_level(level)
    if not sigma >= 0:
        raise ValueError("sigma must be >= 0")
    value = max(0.0, -(mu - sigma * normal_quantile(level)))
    return VarEstimate(level, value, VarMethod.PARAMETRIC_NORMAL)


def historical_var(series, level: float) -> VarEstimate:
    """Empirical-quantile VaR.

    Fails below 20 observations and warns below 100.
    """
    level = _check_level(level)
    r = as_array(series)
    if len(r) < 20:
        raise ValueError(f"series too short for historical VaR: {len(r)} < 20")
    if len(r) < 100:
        warnings.warn(f"historical VaR on only {len(r)} observations", RiskWarning, stacklevel=2)
    value = max(0.0, -empirical_quantile(r, 1.0 - level))
    return VarEstimate(level, value, VarMethod.HISTORICAL, as_of_index=len(r) - 1)


def _standardized(series, fit: GarchFit) -> tuple[np.ndarray, np.ndarray]:
    r = as_array(series)
    if len(fit.variance_path) != len(r):
        raise ValueError(f"fit has {len(fit.variance_path)} variances for {len(r)} returns")
    sd = np.sqrt(fit.variance_path)
    if np.any(sd <= 0):
        raise ValueError("degenerate fit: zero conditional volatility")
    eps = r - fit.params.mu
    return eps / sd, eps


def fhs_var(series, fit: GarchFit, level: float) -> VarEstimate:
    """Filtered historical simulation.

    Residuals are standardised by the fitted volatility path and their
    empirical quantile is rescaled by the one-step forecast volatility.
    """
    level = _check_level(level)
    r = as_array(series)
    if len(r) < 100:
        raise ValueError(f"series too short for FHS VaR: {len(r)} < 100")
    z, _ = _standardized(r, fit)
    sigma_next = math.sqrt(forecast_variance(fit, 1)[0])
    value = max(0.0, -(fit.params.mu + sigma_next * empirical_quantile(z, 1.0 - level)))
    return VarEstimate(level, value, VarMethod.FHS, as_of_index=len(r) - 1)


@dataclass(frozen=True)
class GpdTailFit:
    threshold: float
    xi: float
    beta_gpd: float
    n: int
    n_exceed: int
    threshold_quantile: float
    converged: bool = True

    def __post_init__(self):
        if not self.beta_gpd > 0:
            raise ValueError("GPD scale must be > 0")
        if self.n_exceed < MIN_EXCEEDANCES:
            raise ValueError(f"need at least {MIN_EXCEEDANCES} exceedances, got {self.n_exceed}")


def gpd_log_likelihood(y: np.ndarray, xi: float, beta: float) -> float:
    if not beta > 0:
        return -math.inf
    if abs(xi) < XI_ZERO:
        return float(-len(y) * math.log(beta) - np.sum(y) / beta)
    t = xi * y / beta
    if np.any(t <= -1.0):
        return -math.inf
    return float(-len(y) * math.log(beta) - (1.0 + 1.0 / xi) * np.sum(np.log1p(t)))


def fit_gpd_tail(standardized_losses, threshold_quantile: float = 0.90) -> GpdTailFit:
    """Peaks-over-threshold generalised Pareto fit.

    The threshold is the empirical ``threshold_quantile`` of the losses; the
    exceedances ``loss - u`` over it are fitted by maximum likelihood with a
    Nelder-Mead search over ``(xi, log beta)``.
    """
    losses = np.asarray(standardized_losses, dtype=float)
    if not 0.0 < threshold_quantile < 1.0:
        raise ValueError("threshold_quantile must lie in (0, 1)")
    u = empirical_quantile(losses, threshold_quantile)
    y = losses[losses > u] - u
    if len(y) < MIN_EXCEEDANCES:
        raise ValueError(f"need at least {MIN_EXCEEDANCES} exceedances, got {len(y)}")

    m, v = float(np.mean(y)), float(np.var(y))
    xi0, beta0 = 0.0, m
    if v > 0:
        xi0 = 0.5 * (1.0 - m * m / v)
        beta0 = 0.5 * m * (m * m / v + 1.0)
        if not math.isfinite(gpd_log_likelihood(y, xi0, beta0)):
            xi0, beta0 = 0.0, m

    def nll(theta):
        ll = gpd_log_likelihood(y, theta[0], math.exp(theta[1]))
        return -ll if math.isfinite(ll) else math.inf

    opts = {"xatol": 1e-10, "fatol": 1e-10, "maxiter": 10_000}
    x0 = np.array([xi0, math.log(beta0)])
    res = minimize(nll, x0, method="Nelder-Mead",
                   options={**opts, "initial_simplex": [x0, x0 + [0.1, 0.0], x0 + [0.0, 0.1]]})
    x1 = res.x
    res2 = minimize(nll, x1, method="Nelder-Mead",
                    options={**opts, "initial_simplex": [x1, x1 + [0.05, 0.0], x1 + [0.0, 0.05]]})
    if res2.fun <= res.fun:
        res = res2
    xi = float(res.x[0])
    if abs(xi) < XI_ZERO:
        xi = 0.0
    return GpdTailFit(u, xi, math.exp(res.x[1]), len(losses), len(y), float(threshold_quantile),
                      converged=bool(res.success))


def gpd_tail_quantile(tail: GpdTailFit, level: float) -> float:
    """Standardised-loss quantile implied by the tail fit at ``level``."""
    level = _check_level(level)
    ratio = tail.n / tail.n_exceed * (1.0 - level)
    if ratio > 1.0 + 1e-12:
        raise ValueError(f"level {level} is not beyond the tail threshold "
                         f"(need 1 - level <= {tail.n_exceed / tail.n})")
    ratio = min(ratio, 1.0)
    if abs(tail.xi) < XI_ZERO:
        return tail.threshold - tail.beta_gpd * math.log(ratio)
    return tail.threshold + tail.beta_gpd / tail.xi * (ratio ** (-tail.xi) - 1.0)


def evt_var(tail: GpdTailFit, sigma_next: float, mu: float, level: float) -> VarEstimate:
    """Conditional EVT VaR ``max(0, sigma_next * q - mu)`` from a GPD tail."""
    if not sigma_next > 0:
        raise ValueError("sigma_next must be > 0")
    q = gpd_tail_quantile(tail, level)
    return VarEstimate(level, max(0.0, -(mu - sigma_next * q)), VarMethod.EVT_GPD)


def garch_evt_var(series, fit: GarchFit, level: float, threshold_quantile: float = 0.90) -> VarEstimate:
    """Two-step conditional EVT: GARCH filter, then a GPD on standardised losses."""
    r = as_array(series)
    z, _ = _standardized(r, fit)
    tail = fit_gpd_tail(-z, threshold_quantile)
    sigma_next = math.sqrt(forecast_variance(fit, 1)[0])
    est = evt_var(tail, sigma_next, fit.params.mu, level)
    return VarEstimate(est.level, est.value, est.method, as_of_index=len(r) - 1)


# --- backtesting -------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ViolationLog:
    index: np.ndarray
    returns: np.ndarray
    var_values: np.ndarray
    violations: np.ndarray

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["index", "return", "var_value", "violation"])
            for i, r, v, x in zip(self.index, self.returns, self.var_values, self.violations):
                w.writerow([int(i), repr(float(r)), repr(float(v)), int(bool(x))])


@dataclass(frozen=True)
class BacktestResult:
    n: int
    violations: int
    expected_rate: float
    lr_statistic: float
    p_value: float
    reject_at_5pct: bool
    log: ViolationLog | None = field(default=None, compare=False, repr=False)

    @property
    def violation_rate(self) -> float:
        return self.violations / self.n

    def binomial_band(self, coverage: float = 0.95) -> tuple[int, int]:
        """Central ``coverage`` band of violation counts under correct calibration."""
        tail = (1.0 - coverage) / 2.0
        return (int(binom.ppf(tail, self.n, self.expected_rate)),
                int(binom.ppf(1.0 - tail, self.n, self.expected_rate)))

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "violations": self.violations,
            "lr": self.lr_statistic,
            "p_value": self.p_value,
            "reject_at_5pct": self.reject_at_5pct,
        }


def _xlogy(x: float, y: float) -> float:
    return 0.0 if x == 0 else x * math.log(y)


def kupiec_test(violations: int, n: int, level: float) -> BacktestResult:
    """Kupiec proportion-of-failures likelihood-ratio test (chi-square, 1 dof)."""
    level = _check_level(level)
    x, n = int(violations), int(n)
    if n < 1 or not 0 <= x <= n:
        raise ValueError(f"need 0 <= violations <= n and n >= 1, got {x}, {n}")
    p = 1.0 - level
    phat = x / n
    lr = -2.0 * (_xlogy(n - x, 1.0 - p) + _xlogy(x, p) - _xlogy(n - x, 1.0 - phat) - _xlogy(x, phat))
    lr = max(lr, 0.0)
    p_value = float(chi2.sf(lr, 1))
    return BacktestResult(n, x, p, lr, p_value, p_value < 0.05)


Estimator = Callable[[np.ndarray], "VarEstimate | float"]


def rolling_backtest(series, estimator: Estimator, window: int, level: float,
                     workers: int = 1) -> BacktestResult:
    """Walk-forward VaR backtest.

    For each ``t >= window`` the estimator sees ``returns[t - window:t]`` and
    its VaR is compared with ``returns[t]``; a violation is ``-r_t > VaR``
    (ties survive). Windows may be evaluated on ``workers`` threads; the log
    is always assembled in index order.
    """
    level = _check_level(level)
    r = as_array(series)
    window = int(window)
    if window < 1:
        raise ValueError("window must be a positive integer")
    if len(r) <= window + 10:
        raise ValueError(f"window {window} too large for {len(r)} observations")

    def evaluate(t):
        est = estimator(r[t - window:t])
        value = est.value if isinstance(est, VarEstimate) else float(est)
        if not math.isfinite(value) or value < 0:
            raise ValueError(f"estimator returned invalid VaR {value!r} at index {t}")
        return value

    idx = np.arange(window, len(r))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            values = np.fromiter(pool.map(evaluate, idx), float, len(idx))
    else:
        values = np.fromiter(map(evaluate, idx), float, len(idx))
    hits = -r[idx] > values
    res = kupiec_test(int(hits.sum()), len(idx), level)
    log = ViolationLog(idx, r[idx].copy(), values, hits)
    return BacktestResult(res.n, res.violations, res.expected_rate, res.lr_statistic,
                          res.p_value, res.reject_at_5pct, log)


def parametric_estimator(level: float, mu: float | None = None, sigma: float | None = None) -> Estimator:
    """Gaussian VaR estimator; ``mu``/``sigma`` default to the window's sample moments."""
    def est(window):
        m = float(np.mean(window)) if mu is None else mu
        s = float(np.std(window, ddof=1)) if sigma is None else sigma
        return parametric_var(m, s, level)
    return est


def historical_estimator(level: float) -> Estimator:
    def est(window):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RiskWarning)
            return historical_var(window, level)
    return est


def fhs_estimator(params: GarchParams, level: float) -> Estimator:
    """FHS with fixed GARCH parameters, re-filtered over each window."""
    return lambda window: fhs_var(window, filter_garch(window, params), level)


def evt_estimator(params: GarchParams, level: float, threshold_quantile: float = 0.90) -> Estimator:
    return lambda window: garch_evt_var(window, filter_garch(window, params), level, threshold_quantile)


# --- portfolio aggregation ------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PortfolioSpec:
    weights: np.ndarray
    volatilities: np.ndarray
    correlations: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        s = np.array(self.volatilities, dtype=float)
        c = np.array(self.correlations, dtype=float)
        n = len(w)
        if w.ndim != 1 or s.shape != (n,) or c.shape != (n, n) or n == 0:
            raise ValueError("weights, volatilities and correlations have inconsistent shapes")
        if abs(w.sum() - 1.0) > 1e-9:
            raise ValueError(f"weights must sum to 1, got {w.sum()}")
        if np.any(s < 0) or not np.all(np.isfinite(s)):
            raise ValueError("volatilities must be finite and >= 0")
        if not np.allclose(c, c.T, rtol=0, atol=1e-12):
            raise ValueError("correlation matrix must be symmetric")
        if not np.all(np.diag(c) == 1.0):
            raise ValueError("correlation matrix must have a unit diagonal")
        if np.any(np.abs(c) > 1.0):
            raise ValueError("correlations must lie in [-1, 1]")
        for name, arr in (("weights", w), ("volatilities", s), ("correlations", c)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def covariance(self) -> np.ndarray:
        return self.correlations * np.outer(self.volatilities, self.volatilities)


def _checked_cov(spec: PortfolioSpec) -> np.ndarray:
    smallest = float(np.linalg.eigvalsh(spec.correlations)[0])
    if smallest < PSD_TOLERANCE:
        raise NotPositiveSemidefinite(f"correlation matrix has eigenvalue {smallest:.3e}")
    return spec.covariance


def aggregate_portfolio_sigma(spec: PortfolioSpec) -> float:
    """Portfolio volatility ``sqrt(w' Sigma w)``."""
    cov = _checked_cov(spec)
    w = spec.weights
    return math.sqrt(max(float(w @ (cov @ w)), 0.0))


def component_var(spec: PortfolioSpec, total_var: VarEstimate | float) -> np.ndarray:
    """Euler allocation ``total * w_i (Sigma w)_i / (w' Sigma w)``; sums to ``total``."""
    cov = _checked_cov(spec)
    w = spec.weights
    marginal = cov @ w
    variance = float(w @ marginal)
    if not variance > 0:
        raise ValueError("zero portfolio volatility: nothing to decompose")
    total = total_var.value if isinstance(total_var, VarEstimate) else float(total_var)
    return total * (w * marginal) / variance

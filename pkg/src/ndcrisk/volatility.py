"""
Conditional-variance models: EWMA, ARCH(1) and GARCH(1,1).

The GARCH(1,1) recursion on residuals ``eps_t = r_t - mu`` is

    sigma2_t = omega + alpha * eps_{t-1}**2 + beta * sigma2_{t-1}

with ARCH(1) as the ``beta = 0`` case. Parameters are estimated by Gaussian
quasi-maximum likelihood using a derivative-free simplex search in an
unconstrained reparametrisation (see :func:`fit_garch`).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit, logit

from . import _kernels
from .market_data import ReturnSeries, as_array
from .rng import check_seed, normal_block

SeedVariance = Union[float, str, None]

STATIONARITY_MARGIN = 1e-6
MIN_FIT_LENGTH = 50


@dataclass(frozen=True)
class GarchParams:
    """GARCH(1,1) parameters.

    ``omega > 0`` and ``alpha, beta >= 0`` are enforced here. Covariance
    stationarity (``alpha + beta < 1``) is checked by the operations that need
    it, so explicitly seeded paths of integrated models can still be computed.
    """

    omega: float
    alpha: float
    beta: float
    mu: float = 0.0

    def __post_init__(self):
        for name in ("omega", "alpha", "beta", "mu"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.omega <= 0:
            raise ValueError("omega must be > 0")
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("alpha and beta must be >= 0")

    @property
    def persistence(self) -> float:
        return self.alpha + self.beta

    @property
    def is_stationary(self) -> bool:
        return self.alpha + self.beta < 1.0


@dataclass(frozen=True)
class EwmaParams:
    lam: float
    seed_variance: float

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError(f"EWMA decay must lie in [0, 1], got {self.lam}")
        if not self.seed_variance > 0:
            raise ValueError("seed_variance must be > 0")


@dataclass(frozen=True, eq=False)
class GarchFit:
    """Result of :func:`fit_garch` (or :func:`filter_garch` for fixed parameters)."""

    params: GarchParams
    variance_path: np.ndarray
    residuals: np.ndarray
    log_likelihood: float
    converged: bool
    iterations: int
    seed_variance: float = field(default=float("nan"))

    def __post_init__(self):
        h = np.array(self.variance_path, dtype=float)
        e = np.array(self.residuals, dtype=float)
        h.setflags(write=False)
        e.setflags(write=False)
        object.__setattr__(self, "variance_path", h)
        object.__setattr__(self, "residuals", e)
        if h.shape != e.shape or len(h) == 0:
            raise ValueError("variance_path and residuals must be non-empty and aligned")
        if np.any(~(h > 0)):
            raise ValueError("variance path must be strictly positive")

    def to_dict(self) -> dict:
        p = self.params
        return {
            "omega": p.omega,
            "alpha": p.alpha,
            "beta": p.beta,
            "mu": p.mu,
            "log_likelihood": self.log_likelihood,
            "converged": self.converged,
            "iterations": self.iterations,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


@dataclass(frozen=True)
class FitConfig:
    """Optimizer settings for :func:`fit_garch`.

    ``starts`` holds ``(alpha, beta)`` pairs; omega is set so each start has
    the sample variance as its unconditional variance, mu starts at the sample mean.
    """

    tol: float = 1e-8
    max_iter: int = 10_000
    seed_variance: SeedVariance = None
    starts: tuple = ((0.05, 0.90), (0.10, 0.80), (0.02, 0.97), (0.20, 0.60))
    polish: bool = True


def unconditional_variance(params: GarchParams) -> float:
    """Stationary variance ``omega / (1 - alpha - beta)``."""
    if not params.is_stationary:
        raise ValueError(f"alpha + beta = {params.persistence} >= 1: no unconditional variance")
    return params.omega / (1.0 - params.alpha - params.beta)


def _seed(seed_variance: SeedVariance, r: np.ndarray, params: GarchParams | None = None) -> float:
    if seed_variance is None:
        if len(r) < 2:
            raise ValueError("default seed variance needs at least 2 observations")
        s = float(np.var(r, ddof=1))
        if np.all(r == r[0]) or s <= 0:
            raise ValueError("series has zero variance")
        return s
    if isinstance(seed_variance, str):
        if seed_variance != "unconditional":
            raise ValueError(f"unknown seed variance {seed_variance!r}")
        return unconditional_variance(params)
    s = float(seed_variance)
    if not s > 0 or not math.isfinite(s):
        raise ValueError("seed variance must be > 0")
    return s


def ewma_variance_path(series, params: EwmaParams) -> np.ndarray:
    """RiskMetrics-style recursion ``s2_t = lam * s2_{t-1} + (1 - lam) * r_{t-1}**2``."""
    r = as_array(series)
    if len(r) < 1:
        raise ValueError("empty series")
    lam = params.lam
    h = np.empty(len(r))
    h[0] = params.seed_variance
    for t in range(1, len(r)):
        h[t] = lam * h[t - 1] + (1.0 - lam) * r[t - 1] ** 2
    return h


def garch_variance_path(series, params: GarchParams, seed_variance: SeedVariance = None) -> np.ndarray:
    """Conditional variance path aligned with ``series``.

    ``seed_variance`` sets ``sigma2_1``: a positive number, ``"unconditional"``
    for ``omega / (1 - alpha - beta)``, or ``None`` for the sample variance.
    """
    r = as_array(series)
    if len(r) < 1:
        raise ValueError("empty series")
    h1 = _seed(seed_variance, r, params)
    eps = r - params.mu
    return _kernels.garch_path(eps, params.omega, params.alpha, params.beta, h1)


def arch1_variance_path(series, omega: float, alpha: float, mu: float = 0.0,
                        seed_variance: SeedVariance = None) -> np.ndarray:
    return garch_variance_path(series, GarchParams(omega, alpha, 0.0, mu), seed_variance)


def garch_log_likelihood(series, params: GarchParams, seed_variance: SeedVariance = None) -> float:
    """Gaussian log-likelihood ``-1/2 sum[ln 2pi + ln s2_t + eps_t**2 / s2_t]``."""
    r = as_array(series)
    h = garch_variance_path(r, params, seed_variance)
    return float(_kernels.garch_loglik(r - params.mu, h))


def garch_log_likelihood_gradient(series, params: GarchParams, seed_variance: SeedVariance = None) -> np.ndarray:
    """Analytic gradient of :func:`garch_log_likelihood` wrt ``(omega, alpha, beta, mu)``."""
    r = as_array(series)
    h1 = _seed(seed_variance, r, params)
    dh1 = np.zeros(4)
    if seed_variance == "unconditional":
        d = 1.0 - params.alpha - params.beta
        dh1[0] = 1.0 / d
        dh1[1] = dh1[2] = params.omega / d**2
    return _kernels.garch_loglik_grad(r - params.mu, params.omega, params.alpha, params.beta, h1, dh1)


def filter_garch(series, params: GarchParams, seed_variance: SeedVariance = None) -> GarchFit:
    """Run known parameters over a series and package the result like a fit."""
    r = as_array(series)
    h1 = _seed(seed_variance, r, params)
    eps = r - params.mu
    h = _kernels.garch_path(eps, params.omega, params.alpha, params.beta, h1)
    ll = float(_kernels.garch_loglik(eps, h))
    return GarchFit(params, h, eps, ll, converged=True, iterations=0, seed_variance=h1)


def _unpack(theta) -> GarchParams:
    a, b, c, mu = theta
    omega = math.exp(min(a, 700.0))
    alpha = float(expit(b)) * (1.0 - STATIONARITY_MARGIN)
    beta = float(expit(c)) * (1.0 - alpha - STATIONARITY_MARGIN)
    return GarchParams(max(omega, 1e-300), alpha, beta, float(mu))


def _pack(params: GarchParams) -> np.ndarray:
    b = logit(params.alpha / (1.0 - STATIONARITY_MARGIN))
    c = logit(params.beta / (1.0 - params.alpha - STATIONARITY_MARGIN))
    return np.array([math.log(params.omega), b, c, params.mu])


def fit_garch(series, config: FitConfig | None = None) -> GarchFit:
    """Quasi-maximum-likelihood GARCH(1,1) fit.

    The search runs in ``(a, b, c, mu)`` with ``omega = exp(a)``,
    ``alpha = logistic(b) (1 - d)`` and ``beta = logistic(c) (1 - alpha - d)``,
    ``d = 1e-6``, so every trial point is a valid stationary model. Scipy's
    Nelder-Mead is run from each start in ``config.starts`` and, optionally,
    restarted once from the best vertex. The procedure is deterministic.

    Raises
    ------
    ValueError
        Fewer than 50 observations, or a constant series.
    """
    config = config or FitConfig()
    r = as_array(series)
    if len(r) < MIN_FIT_LENGTH:
        raise ValueError(f"GARCH fit needs at least {MIN_FIT_LENGTH} observations, got {len(r)}")
    var = float(np.var(r, ddof=1))
    if np.all(r == r[0]) or not var > 0:
        raise ValueError("cannot fit GARCH to a series with zero variance")
    fixed_seed = None if config.seed_variance == "unconditional" else _seed(config.seed_variance, r)
    mean = float(np.mean(r))
    sd = math.sqrt(var)

    def seed_of(p):
        return fixed_seed if fixed_seed is not None else unconditional_variance(p)

    def objective(theta):
        p = _unpack(theta)
        eps = r - p.mu
        h = _kernels.garch_path(eps, p.omega, p.alpha, p.beta, seed_of(p))
        ll = _kernels.garch_loglik(eps, h)
        return -ll if math.isfinite(ll) else math.inf

    steps = np.array([0.5, 0.5, 0.5, 0.1 * sd])

    def run(x0):
        simplex = np.vstack([x0] + [x0 + np.eye(4)[j] * steps[j] for j in range(4)])
        return minimize(
            objective, x0, method="Nelder-Mead",
            options={"initial_simplex": simplex, "fatol": config.tol, "xatol": config.tol,
                     "maxiter": config.max_iter, "maxfev": 4 * config.max_iter},
        )

    best = None
    iterations = 0
    for alpha0, beta0 in config.starts:
        start = GarchParams(var * (1.0 - alpha0 - beta0), alpha0, beta0, mean)
        res = run(_pack(start))
        iterations += int(res.nit)
        if best is None or res.fun < best.fun:
            best = res
    if config.polish:
        res = run(np.asarray(best.x))
        iterations += int(res.nit)
        if res.fun <= best.fun:
            best = res

    params = _unpack(best.x)
    h1 = seed_of(params)
    eps = r - params.mu
    h = _kernels.garch_path(eps, params.omega, params.alpha, params.beta, h1)
    ll = float(_kernels.garch_loglik(eps, h))
    return GarchFit(params, h, eps, ll, converged=bool(best.success), iterations=iterations, seed_variance=h1)


def forecast_variance(fit: GarchFit, horizon: int) -> np.ndarray:
    """Variance forecasts for ``h = 1..horizon`` past the end of the fitted sample."""
    horizon = int(horizon)
    if horizon < 1:
        raise ValueError("horizon must be a positive integer")
    p = fit.params
    if not p.is_stationary:
        raise ValueError("forecasting requires alpha + beta < 1")
    out = np.empty(horizon)
    e = fit.residuals[-1]
    out[0] = p.omega + p.alpha * (e * e) + p.beta * fit.variance_path[-1]
    ab = p.alpha + p.beta
    for k in range(1, horizon):
        out[k] = p.omega + ab * out[k - 1]
    return out


def simulate_garch(params: GarchParams, n: int, seed: int, seed_variance: SeedVariance = "unconditional"):
    """Simulate ``n`` returns from a Gaussian GARCH(1,1).

    Innovations are path 0, steps ``0..n-1`` of the counter-based stream (see
    :mod:`ndcrisk.rng`). Returns ``(ReturnSeries, variance_path)``.
    """
    n = int(n)
    if n < 1:
        raise ValueError("n must be >= 1")
    if seed_variance is None:
        seed_variance = "unconditional"
    h1 = _seed(seed_variance, np.empty(0), params)
    z = normal_block(check_seed(seed), 0, 1, 0, n)[0]
    h, eps = _kernels.garch_simulate(z, params.omega, params.alpha, params.beta, h1)
    return ReturnSeries(params.mu + eps, kind="log"), h

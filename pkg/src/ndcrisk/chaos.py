"""
Chaos diagnostics and the exploratory NDC volatility model.

The NDC ("nonlinear dynamic chaos") variance model implemented here is an
interpretive construction rather than an estimated model. It
places two extra terms on top of a GARCH(1,1) core:

    sigma2_t = max(omega + alpha * eps_{t-1}**2 + beta * sigma2_{t-1}
                   + gamma * |C_t| + delta * x_t,  variance_floor)

* ``C_t = prod_k A_k sin(2 pi t / P_k + phi_k)`` is the intermodulation of a
  set of business cycles (``t = 1, 2, ...``), zero for an empty set;
* ``x_t`` is the logistic-map orbit ``x_1 = x0, x_{t+1} = r x_t (1 - x_t)``.

The first variance is ``sigma2_1 = max(s + gamma |C_1| + delta x_1, floor)`` with
``s`` the unconditional variance of the core. With ``gamma = delta = 0`` and a
non-binding floor the path is exactly the GARCH path.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import _kernels
from .exceptions import RiskWarning
from .market_data import ReturnSeries
from .rng import check_seed, normal_block
from .var import parametric_estimator, rolling_backtest
from .volatility import GarchParams, unconditional_variance

DEFAULT_X0 = 0.61803398875
FIXED_POINT_KICK = 1e-9
MAX_CLAMP_RATE = 1e-3
MODEL_LABEL = "NDC volatility model (exploratory/interpretive)"


@dataclass(frozen=True)
class Cycle:
    amplitude: float
    period: float
    phase: float = 0.0

    def __post_init__(self):
        if not self.amplitude >= 0:
            raise ValueError("cycle amplitude must be >= 0")
        if not self.period > 0:
            raise ValueError("cycle period must be > 0")


@dataclass(frozen=True)
class NdcParams:
    core: GarchParams
    cycles: tuple = ()
    gamma: float = 0.0
    delta: float = 0.0
    r: float = 4.0
    x0: float = DEFAULT_X0
    variance_floor: float = 1e-12

    def __post_init__(self):
        object.__setattr__(self, "cycles", tuple(self.cycles))
        if not self.core.is_stationary:
            raise ValueError("NDC core must satisfy alpha + beta < 1")
        if self.gamma < 0 or self.delta < 0:
            raise ValueError("gamma and delta must be >= 0")
        if not 0.0 < self.r <= 4.0:
            raise ValueError(f"logistic parameter must lie in (0, 4], got {self.r}")
        if not 0.0 < self.x0 < 1.0:
            raise ValueError(f"x0 must lie in (0, 1), got {self.x0}")
        if not self.variance_floor > 0:
            raise ValueError("variance_floor must be > 0")

    @classmethod
    def from_dict(cls, d: dict) -> "NdcParams":
        core = GarchParams(float(d["omega"]), float(d["alpha"]), float(d["beta"]), float(d.get("mu", 0.0)))
        cycles = tuple(Cycle(float(c["amplitude"]), float(c["period"]), float(c.get("phase", 0.0)))
                       for c in d.get("cycles", []))
        return cls(core, cycles, float(d.get("gamma", 0.0)), float(d.get("delta", 0.0)),
                   float(d.get("r", 4.0)), float(d.get("x0", DEFAULT_X0)),
                   float(d.get("variance_floor", 1e-12)))

    def to_dict(self) -> dict:
        return {
            "omega": self.core.omega, "alpha": self.core.alpha, "beta": self.core.beta, "mu": self.core.mu,
            "cycles": [{"amplitude": c.amplitude, "period": c.period, "phase": c.phase} for c in self.cycles],
            "gamma": self.gamma, "delta": self.delta, "r": self.r, "x0": self.x0,
            "variance_floor": self.variance_floor,
        }


def load_ndc_params(path) -> NdcParams:
    with open(path, encoding="utf-8") as fh:
        return NdcParams.from_dict(json.load(fh))


def logistic_step(x: float, r: float) -> float:
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"logistic state must lie in [0, 1], got {x}")
    if not 0.0 < r <= 4.0:
        raise ValueError(f"logistic parameter must lie in (0, 4], got {r}")
    return min(max(r * x * (1.0 - x), 0.0), 1.0)


def logistic_orbit(r: float, x0: float, n: int) -> tuple[np.ndarray, int]:
    """First ``n`` states starting at ``x0`` and the number of round-off clamps."""
    if not 0.0 <= x0 <= 1.0:
        raise ValueError(f"logistic state must lie in [0, 1], got {x0}")
    x, clamps = _kernels.logistic_orbit(float(r), float(x0), int(n))
    if n and clamps / n > MAX_CLAMP_RATE:
        warnings.warn(f"logistic orbit clamped {clamps} of {n} states", RiskWarning, stacklevel=2)
    return x, int(clamps)


def lyapunov_exponent(r: float, x0: float = DEFAULT_X0, burn_in: int = 1000, n: int = 100_000) -> float:
    """Orbit average of ``ln|r (1 - 2 x_k)|`` after ``burn_in`` iterations.

    A state that maps exactly onto itself is nudged by 1e-9 so the orbit does
    not stick at a repelling fixed point. If the orbit lands on ``x = 1/2``
    (zero derivative) the result is ``-inf`` and a :class:`RiskWarning` is issued.
    """
    if n < 10_000:
        raise ValueError("a reported Lyapunov estimate needs n >= 10000")
    return _lyapunov(r, x0, burn_in, n)


def _lyapunov(r, x0, burn_in, n) -> float:
    if not 0.0 < x0 < 1.0:
        raise ValueError(f"x0 must lie in (0, 1), got {x0}")
    if not 0.0 < r <= 4.0:
        raise ValueError(f"logistic parameter must lie in (0, 4], got {r}")
    total, _, degenerate = _kernels.lyapunov_sum(float(r), float(x0), int(burn_in), int(n), FIXED_POINT_KICK)
    if degenerate:
        warnings.warn("orbit hit a zero-derivative point; Lyapunov exponent is -inf", RiskWarning, stacklevel=3)
        return -math.inf
    return total / n


def cycle_interaction_signal(cycles: Sequence[Cycle], t):
    """Product of cycle terms ``A sin(2 pi t / P + phi)``; 0 for no cycles."""
    t_arr = np.asarray(t, dtype=float)
    if not cycles:
        return np.zeros_like(t_arr) if t_arr.ndim else 0.0
    out = np.ones_like(t_arr)
    for c in cycles:
        if c.period <= 2:
            warnings.warn(f"cycle period {c.period} <= 2 is aliased at unit sampling", RiskWarning, stacklevel=2)
        out = out * (c.amplitude * np.sin(2.0 * np.pi * t_arr / c.period + c.phase))
    return out if t_arr.ndim else float(out)


def _drivers(params: NdcParams, n: int):
    t = np.arange(1, n + 1, dtype=float)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RiskWarning)
        cyc = np.abs(cycle_interaction_signal(params.cycles, t)) if params.cycles else np.zeros(n)
    if params.cycles and any(c.period <= 2 for c in params.cycles):
        warnings.warn("a cycle period <= 2 is aliased at unit sampling", RiskWarning, stacklevel=3)
    x, clamps = logistic_orbit(params.r, params.x0, n)
    return cyc, x, clamps


def ndc_variance_path(innovations, params: NdcParams) -> np.ndarray:
    """NDC conditional variances for a given residual sequence (see module docstring)."""
    eps = np.asarray(innovations, dtype=float)
    if eps.ndim != 1 or len(eps) < 1:
        raise ValueError("innovations must be a non-empty 1-d sequence")
    cyc, x, _ = _drivers(params, len(eps))
    c = params.core
    return _kernels.ndc_path(eps, c.omega, c.alpha, c.beta, unconditional_variance(c),
                             cyc, x, params.gamma, params.delta, params.variance_floor)


def simulate_ndc(params: NdcParams, n: int, seed: int = 42) -> tuple[ReturnSeries, np.ndarray]:
    """Simulate returns and their NDC variance path; innovations from stream path 0."""
    n = int(n)
    if n < 1:
        raise ValueError("n must be >= 1")
    z = normal_block(check_seed(seed), 0, 1, 0, n)[0]
    cyc, x, _ = _drivers(params, n)
    c = params.core
    h, eps = _kernels.ndc_simulate(z, c.omega, c.alpha, c.beta, unconditional_variance(c),
                                   cyc, x, params.gamma, params.delta, params.variance_floor)
    return ReturnSeries(c.mu + eps, kind="log"), h


def simulate_ndc_returns(params: NdcParams, n: int, seed: int = 42) -> ReturnSeries:
    return simulate_ndc(params, n, seed)[0]


@dataclass(frozen=True, eq=False)
class ChaosDiagnostics:
    """Outcome of :func:`divergence_diagnostic`.

    ``divergence_times`` lists ``(gap, t)``: the first step ``t`` at which the
    variance gap reached ``delta * eta * e**k``, ``k = 1, 2, ...`` up to
    ``target_gap``. ``divergence_time`` is the first step at which the gap
    reached ``target_gap`` (``None`` if it never did).
    """

    lyapunov_estimate: float
    divergence_times: tuple
    divergence_time: int | None
    target_gap: float
    gap: np.ndarray = field(repr=False)
    chaotic: bool
    clamp_count: int = 0

    @property
    def efolding_time(self) -> int | None:
        return self.divergence_times[0][1] if self.divergence_times else None

    def predicted_divergence_time(self, eta: float, delta: float) -> float:
        """Lyapunov-time prediction ``ln(target_gap / (delta eta)) / lambda``."""
        return math.log(self.target_gap / (delta * eta)) / self.lyapunov_estimate


def _first_reach(gap: np.ndarray, level: float) -> int | None:
    hit = np.flatnonzero(gap >= level)
    return int(hit[0]) if len(hit) else None


def divergence_diagnostic(params: NdcParams, eta: float = 1e-8, n: int = 10_000, seed: int = 42,
                          target_fraction: float = 1e-2) -> ChaosDiagnostics:
    """Butterfly-effect test: perturb the map's initial state by ``eta``.

    Residuals are simulated once from the unperturbed model and fed to both
    variance recursions, so the gap ``|sigma2_t - sigma2'_t|`` comes only from
    the chaotic term. ``target_gap = target_fraction * delta``.
    """
    if not 0 < eta <= 1e-4:
        raise ValueError("eta must lie in (0, 1e-4]")
    if not 0.0 < params.x0 + eta < 1.0:
        raise ValueError("perturbed x0 leaves (0, 1)")
    n = int(n)
    _, x_clamps = logistic_orbit(params.r, params.x0, n)
    returns, _ = simulate_ndc(params, n, seed)
    eps = returns.returns - params.core.mu
    base = ndc_variance_path(eps, params)
    pert = ndc_variance_path(eps, replace(params, x0=params.x0 + eta))
    gap = np.abs(pert - base)
    lam = _lyapunov(params.r, params.x0, 0, n)

    if params.delta == 0:
        return ChaosDiagnostics(lam, (), None, 0.0, gap, False, x_clamps)

    start = params.delta * eta
    target = target_fraction * params.delta
    ladder = []
    k = 1
    while start * math.e**k <= target:
        t = _first_reach(gap, start * math.e**k)
        if t is None:
            break
        ladder.append((start * math.e**k, t))
        k += 1
    return ChaosDiagnostics(lam, tuple(ladder), _first_reach(gap, target), target, gap,
                            bool(lam > 0), x_clamps)


@dataclass(frozen=True)
class ProbeResult:
    trials: int
    rejection_rate_ndc: float
    rejection_rate_garch: float
    mean_violation_rate_ndc: float
    mean_violation_rate_garch: float
    expected_rate: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def gaussian_var_probe(params: NdcParams, n: int = 1000, trials: int = 100, window: int = 250,
                       level: float = 0.99, seed: int = 42) -> ProbeResult:
    """Compare Gaussian-VaR calibration on NDC returns against the GARCH core alone.

    Each trial simulates the NDC model and its GARCH core (``gamma = delta = 0``)
    from the same seed, backtests a rolling Gaussian VaR (trailing-window mean
    and standard deviation) on both, and records Kupiec rejections at 5%.
    """
    matched = replace(params, gamma=0.0, delta=0.0, cycles=())
    est = parametric_estimator(level)
    rej = {"ndc": 0, "garch": 0}
    rates = {"ndc": [], "garch": []}
    for i in range(trials):
        for name, p in (("ndc", params), ("garch", matched)):
            r, _ = simulate_ndc(p, n, check_seed(seed + i))
            res = rolling_backtest(r, est, window, level)
            rej[name] += res.reject_at_5pct
            rates[name].append(res.violation_rate)
    return ProbeResult(trials, rej["ndc"] / trials, rej["garch"] / trials,
                       float(np.mean(rates["ndc"])), float(np.mean(rates["garch"])), 1.0 - level)

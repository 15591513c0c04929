"""
Monte Carlo simulation of geometric Brownian motion.

Paths use the exact log-normal scheme

    S_k = s0 * exp((mu - sigma**2 / 2) * k * dt + sigma * sqrt(dt) * sum_{j<k} Z_j)

with ``Z`` drawn from the counter-based stream in :mod:`ndcrisk.rng`
(``path`` = row, ``step`` = column). Work is split into fixed-size blocks of
paths; the block layout does not depend on ``workers``, so output is
bit-identical for any thread count.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .rng import check_seed, normal_block
from .var import VarEstimate, VarMethod, empirical_quantile

BLOCK_ELEMENTS = 1 << 20


@dataclass(frozen=True)
class GbmParams:
    s0: float
    mu: float
    sigma: float
    dt: float
    steps: int
    n_paths: int
    seed: int = 42

    def __post_init__(self):
        if not (self.s0 > 0 and math.isfinite(self.s0)):
            raise ValueError("s0 must be > 0")
        if not math.isfinite(self.mu):
            raise ValueError("mu must be finite")
        if not (self.sigma >= 0 and math.isfinite(self.sigma)):
            raise ValueError("sigma must be >= 0")
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValueError("dt must be > 0")
        if int(self.steps) < 1 or int(self.n_paths) < 1:
            raise ValueError("steps and n_paths must be positive integers")
        check_seed(self.seed)

    @property
    def horizon(self) -> float:
        return self.steps * self.dt


def _blocks(params: GbmParams):
    rows = max(1, BLOCK_ELEMENTS // params.steps)
    return [(start, min(rows, params.n_paths - start)) for start in range(0, params.n_paths, rows)]


def _map_blocks(fn, blocks, workers: int):
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, blocks))
    return [fn(b) for b in blocks]


def _check_overflow(values: np.ndarray) -> None:
    if not np.all(np.isfinite(values)):
        raise OverflowError("simulated prices overflowed; drift or horizon is too large")


def simulate_gbm_paths(params: GbmParams, workers: int = 1) -> np.ndarray:
    """Price paths of shape ``(n_paths, steps + 1)``; column 0 is ``s0``."""
    drift = params.mu - 0.5 * params.sigma**2
    vol = params.sigma * math.sqrt(params.dt)
    t = np.arange(params.steps + 1) * params.dt

    def block(b):
        start, count = b
        z = normal_block(params.seed, start, count, 0, params.steps)
        walk = np.zeros((count, params.steps + 1))
        np.cumsum(z, axis=1, out=walk[:, 1:])
        with np.errstate(over="ignore"):
            return params.s0 * np.exp(drift * t + vol * walk)

    out = np.vstack(_map_blocks(block, _blocks(params), workers))
    _check_overflow(out)
    return out


def terminal_log_returns(params: GbmParams, workers: int = 1) -> np.ndarray:
    """``ln(S_T / s0)`` per path without materialising whole paths."""
    drift = (params.mu - 0.5 * params.sigma**2) * params.horizon
    vol = params.sigma * math.sqrt(params.dt)

    def block(b):
        start, count = b
        z = normal_block(params.seed, start, count, 0, params.steps)
        return drift + vol * z.sum(axis=1)

    return np.concatenate(_map_blocks(block, _blocks(params), workers))


def monte_carlo_var(params: GbmParams, level: float, workers: int = 1) -> VarEstimate:
    """Empirical ``level`` quantile of ``1 - S_T / s0`` over simulated paths."""
    if params.n_paths < 1000:
        raise ValueError(f"Monte Carlo VaR needs at least 1000 paths, got {params.n_paths}")
    x = terminal_log_returns(params, workers)
    with np.errstate(over="ignore"):
        losses = -np.expm1(x)
    _check_overflow(losses)
    value = max(0.0, empirical_quantile(losses, level))
    return VarEstimate(level, value, VarMethod.MONTE_CARLO, horizon_periods=params.steps)


def write_paths_csv(paths: np.ndarray, path) -> None:
    """Dump paths as ``path,step0,...,stepN`` rows."""
    n_steps = paths.shape[1]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["path"] + [f"step{k}" for k in range(n_steps)])
        for i, row in enumerate(paths):
            w.writerow([i] + [repr(float(v)) for v in row])

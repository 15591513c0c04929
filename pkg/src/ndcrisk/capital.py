"""Cost-of-capital calculators: beta, CAPM cost of equity, WACC."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .exceptions import RiskWarning
from .market_data import as_array

WEIGHT_TOLERANCE = 1e-9
BETA_BAND = (0.0, 2.0)


@dataclass(frozen=True)
class CapitalStructure:
    """Capital mix. Weights are fractions of total capitalisation and must sum to 1."""

    kd: float
    tax_rate: float
    d_v: float
    ke: float
    e_v: float
    kp: float = 0.0
    p_v: float = 0.0

    def __post_init__(self):
        for name in ("kd", "tax_rate", "d_v", "ke", "e_v", "kp", "p_v"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if not 0.0 <= self.tax_rate <= 1.0:
            raise ValueError(f"tax rate must lie in [0, 1], got {self.tax_rate}")
        if min(self.d_v, self.e_v, self.p_v) < 0:
            raise ValueError("capital weights must be >= 0")
        total = self.d_v + self.e_v + self.p_v
        if abs(total - 1.0) > WEIGHT_TOLERANCE:
            raise ValueError(f"capital weights must sum to 1, got {total}")

    @classmethod
    def from_dict(cls, d: dict) -> "CapitalStructure":
        return cls(**{k: float(d[k]) for k in ("kd", "tax_rate", "d_v", "ke", "e_v", "kp", "p_v")})


@dataclass(frozen=True)
class CapmInputs:
    rf: float
    beta: float
    mrp: float

    def __post_init__(self):
        if self.mrp <= 0:
            warnings.warn(f"market risk premium {self.mrp} is not positive", RiskWarning, stacklevel=3)


def estimate_beta(asset, market) -> float:
    """OLS slope of asset returns on market returns, ``cov(a, m) / var(m)``.

    Raw returns are used (no risk-free leg). Slopes outside [0, 2] are legal
    but raise a :class:`RiskWarning`.
    """
    a = as_array(asset)
    m = as_array(market)
    if len(a) != len(m):
        raise ValueError(f"asset and market lengths differ: {len(a)} vs {len(m)}")
    if len(a) < 30:
        raise ValueError(f"beta needs at least 30 paired observations, got {len(a)}")
    dm = m - m.mean()
    var_m = float(dm @ dm)
    if np.all(m == m[0]) or not var_m > 0:
        raise ValueError("market series has zero variance")
    beta = float((a - a.mean()) @ dm / var_m)
    lo, hi = BETA_BAND
    if not lo <= beta <= hi:
        warnings.warn(f"beta {beta:.4f} outside the usual [{lo}, {hi}] band", RiskWarning, stacklevel=2)
    return beta


def capm_cost_of_equity(inputs: CapmInputs) -> float:
    """``ke = rf + beta * mrp``."""
    return inputs.rf + inputs.beta * inputs.mrp


def wacc(structure: CapitalStructure) -> float:
    """``kd (1 - T) D/V + ke E/V + kp P/V``."""
    s = structure
    return s.kd * (1.0 - s.tax_rate) * s.d_v + s.ke * s.e_v + s.kp * s.p_v

"""
Capital-budgeting methods: NPV, IRR, simple and discounted payback,
accounting rate of return, and Black-Scholes pricing for real options.

Times are in years; rates are annual and compounded as ``(1 + rate) ** time``.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy.special import ndtr

from .exceptions import RiskWarning

IRR_LOW = -0.999
IRR_HIGH = 10.0
IRR_STEP = 0.01
IRR_XTOL = 1e-12
IRR_RESIDUAL = 1e-10


@dataclass(frozen=True, eq=False)
class CashflowSchedule:
    times: np.ndarray
    amounts: np.ndarray
    discount_rate: float = 0.0

    def __post_init__(self):
        t = np.array(self.times, dtype=float)
        a = np.array(self.amounts, dtype=float)
        if t.ndim != 1 or t.shape != a.shape or len(t) == 0:
            raise ValueError("a schedule needs at least one (time, amount) pair")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(a))):
            raise ValueError("times and amounts must be finite")
        if np.any(t < 0) or np.any(np.diff(t) < 0):
            raise ValueError("times must be >= 0 and nondecreasing")
        if not self.discount_rate > -1:
            raise ValueError("discount rate must be > -1")
        t.setflags(write=False)
        a.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "amounts", a)

    @classmethod
    def from_amounts(cls, amounts, discount_rate: float = 0.0) -> "CashflowSchedule":
        """Flows at ``t = 0, 1, 2, ...``."""
        return cls(np.arange(len(amounts), dtype=float), amounts, discount_rate)


def load_cashflows(source, discount_rate: float = 0.0) -> CashflowSchedule:
    """Read ``time,amount`` CSV (header optional) from a path, stream or string."""
    if hasattr(source, "read"):
        text = source.read()
        if isinstance(text, bytes):
            text = text.decode("utf-8-sig")
    else:
        with open(source, encoding="utf-8-sig") as fh:
            text = fh.read()
    times, amounts = [], []
    for lineno, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not row or all(not c.strip() for c in row):
            continue
        if lineno == 1 and [c.strip().lower() for c in row] == ["time", "amount"]:
            continue
        if len(row) != 2:
            raise ValueError(f"line {lineno}: expected 2 fields, got {len(row)}")
        try:
            times.append(float(row[0]))
            amounts.append(float(row[1]))
        except ValueError:
            raise ValueError(f"line {lineno}: malformed cashflow row {row!r}") from None
    return CashflowSchedule(times, amounts, discount_rate)


def _npv_at(times, amounts, rate):
    return float(np.sum(amounts / (1.0 + rate) ** times))


def npv(schedule: CashflowSchedule, rate: float | None = None) -> float:
    """Net present value at the schedule's discount rate (or ``rate`` if given)."""
    rate = schedule.discount_rate if rate is None else float(rate)
    if not rate > -1:
        raise ValueError("rate must be > -1")
    return _npv_at(schedule.times, schedule.amounts, rate)


@dataclass(frozen=True)
class IrrResult:
    rate: float
    roots: tuple

    @property
    def multiple(self) -> bool:
        return len(self.roots) > 1


def _residual_scale(times, amounts, rate):
    # floating-point size of the NPV sum at ``rate``
    return float(np.sum(np.abs(amounts) / (1.0 + rate) ** times))


def _bisect(t, a, lo, hi, flo):
    """Bisect a bracket to ``IRR_XTOL``, then on until the residual is small or
    the bracket stops shrinking in floating point."""
    for _ in range(2000):
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            break
        if hi - lo <= IRR_XTOL:
            best = lo if abs(_npv_at(t, a, lo)) <= abs(_npv_at(t, a, hi)) else hi
            if abs(_npv_at(t, a, best)) < IRR_RESIDUAL * _residual_scale(t, a, best):
                return float(best)
        fm = _npv_at(t, a, mid)
        if fm == 0.0:
            return float(mid)
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return float(lo if abs(_npv_at(t, a, lo)) <= abs(_npv_at(t, a, hi)) else hi)


def irr_roots(schedule: CashflowSchedule) -> IrrResult:
    """All IRR roots found by a 0.01-step bracket scan over (-0.999, 10] plus bisection."""
    a, t = schedule.amounts, schedule.times
    nz = a[a != 0]
    if len(nz) == 0 or np.all(nz > 0) or np.all(nz < 0):
        raise ValueError("IRR needs at least one sign change in the cashflows")
    n_steps = int(round((IRR_HIGH - IRR_LOW) / IRR_STEP))
    grid = IRR_LOW + IRR_STEP * np.arange(n_steps + 1)
    grid[-1] = IRR_HIGH
    with np.errstate(over="ignore", invalid="ignore"):
        vals = np.sum(a[None, :] / (1.0 + grid[:, None]) ** t[None, :], axis=1)
    roots = []
    for i in range(len(grid) - 1):
        lo, hi, flo, fhi = grid[i], grid[i + 1], vals[i], vals[i + 1]
        if not (math.isfinite(flo) and math.isfinite(fhi)):
            continue
        if flo == 0.0:
            roots.append(float(lo))
            continue
        if flo * fhi > 0 or fhi == 0.0:
            continue
        roots.append(_bisect(t, a, lo, hi, flo))
    if vals[-1] == 0.0:
        roots.append(float(grid[-1]))
    if not roots:
        raise ValueError("no IRR root in (-0.999, 10]")
    return IrrResult(roots[0], tuple(roots))


def irr(schedule: CashflowSchedule) -> float:
    """Smallest internal rate of return; warns when several roots exist.

    The root must satisfy ``|NPV(irr)| < 1e-10 * sum |a_i| (1 + irr)**-t_i``,
    a tolerance relative to the size of the discounted flows.
    """
    res = irr_roots(schedule)
    if res.multiple:
        warnings.warn(f"multiple IRR roots found: {res.roots}", RiskWarning, stacklevel=2)
    t, a = schedule.times, schedule.amounts
    residual = abs(_npv_at(t, a, res.rate))
    if residual >= IRR_RESIDUAL * _residual_scale(t, a, res.rate):
        raise ValueError(f"IRR bisection did not meet the residual tolerance ({residual:.3e})")
    return res.rate


def payback_period(schedule: CashflowSchedule, discounted: bool = False) -> float | None:
    """Years until cumulative (optionally discounted) cashflow first reaches zero.

    Linear interpolation inside the crossing interval. Returns ``None`` when
    the cumulative value never recovers.
    """
    a, t = schedule.amounts, schedule.times
    if a[0] >= 0:
        raise ValueError("payback needs a negative initial flow")
    if discounted:
        a = a / (1.0 + schedule.discount_rate) ** t
    cum = np.cumsum(a)
    for i in range(1, len(cum)):
        if cum[i] >= 0 > cum[i - 1]:
            return float(t[i - 1] + (-cum[i - 1]) / (cum[i] - cum[i - 1]) * (t[i] - t[i - 1]))
    return None


def arr(schedule: CashflowSchedule) -> float:
    """Cashflow proxy for the accounting rate of return.

    Mean of the flows after the first, divided by the absolute initial
    investment. This is not accounting profit; reports label it as a proxy.
    """
    a = schedule.amounts
    if a[0] == 0:
        raise ValueError("zero initial investment")
    if a[0] > 0:
        raise ValueError("ARR needs a negative initial flow (the investment)")
    if len(a) < 2:
        return 0.0
    return float(np.mean(a[1:]) / abs(a[0]))


@dataclass(frozen=True)
class OptionSpec:
    spot: float
    strike: float
    rate: float
    volatility: float
    maturity: float
    kind: Literal["call", "put"] = "call"

    def __post_init__(self):
        if not (self.spot > 0 and self.strike > 0):
            raise ValueError("spot and strike must be > 0")
        if not self.volatility >= 0:
            raise ValueError("volatility must be >= 0")
        if not self.maturity > 0:
            raise ValueError("maturity must be > 0")
        if not math.isfinite(self.rate):
            raise ValueError("rate must be finite")
        if self.kind not in ("call", "put"):
            raise ValueError(f"option kind must be 'call' or 'put', got {self.kind!r}")


def black_scholes_price(spec: OptionSpec) -> float:
    """European option price under Black-Scholes.

    Standard normal CDF is ``scipy.special.ndtr``. Puts use the direct
    formula ``K e^{-rT} N(-d2) - S N(-d1)``; zero volatility gives the
    discounted intrinsic value.
    """
    s, k, r, sig, T = spec.spot, spec.strike, spec.rate, spec.volatility, spec.maturity
    disc_k = k * math.exp(-r * T)
    if sig == 0:
        return max(0.0, s - disc_k) if spec.kind == "call" else max(0.0, disc_k - s)
    sd = sig * math.sqrt(T)
    d1 = (math.log(s / k) + (r + 0.5 * sig * sig) * T) / sd
    d2 = d1 - sd
    if spec.kind == "call":
        price = s * ndtr(d1) - disc_k * ndtr(d2)
    else:
        price = disc_k * ndtr(-d2) - s * ndtr(-d1)
    return max(0.0, float(price))

"""
Price and return series: ingestion, conversion and descriptive statistics.

Every estimator in the package consumes a :class:`ReturnSeries`. Prices come
in through :func:`load_price_series`, which reads ``date,price`` CSV text.
"""

from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass
from datetime import date
from typing import BinaryIO, Literal, TextIO

import numpy as np

ReturnKind = Literal["log", "simple"]

_DATE_RE = re.compile(r"^\d{4}-\d{2}-\d{2}$")
_NUMBER_RE = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$")


def _frozen(values, dtype) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class PriceSeries:
    """Ascending-date price observations.

    Parameters
    ----------
    dates : array of ``datetime64[D]``
        Strictly increasing calendar days. Gaps are allowed.
    prices : array of float
        Positive prices, one per date.
    periods_per_year : int
        Sampling frequency used to annualise (252 for daily data).
    """

    dates: np.ndarray
    prices: np.ndarray
    periods_per_year: int = 252

    def __post_init__(self):
        dates = _frozen(self.dates, "datetime64[D]")
        prices = _frozen(self.prices, float)
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "prices", prices)
        if dates.shape != prices.shape or dates.ndim != 1:
            raise ValueError("dates and prices must be 1-d and of equal length")
        if len(prices) < 2:
            raise ValueError("a price series needs at least 2 observations")
        if not np.all(np.isfinite(prices)) or np.any(prices <= 0):
            raise ValueError("prices must be finite and > 0")
        if np.any(np.diff(dates) <= np.timedelta64(0, "D")):
            raise ValueError("dates must be strictly increasing")
        if int(self.periods_per_year) < 1:
            raise ValueError("periods_per_year must be a positive integer")

    def __len__(self):
        return len(self.prices)

    def __eq__(self, other):
        if not isinstance(other, PriceSeries):
            return NotImplemented
        return (
            self.periods_per_year == other.periods_per_year
            and np.array_equal(self.dates, other.dates)
            and np.array_equal(self.prices, other.prices)
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class ReturnSeries:
    """Per-period returns (fractions) of a single kind."""

    returns: np.ndarray
    kind: ReturnKind = "log"
    periods_per_year: int = 252

    def __post_init__(self):
        r = _frozen(self.returns, float)
        object.__setattr__(self, "returns", r)
        if r.ndim != 1 or len(r) < 1:
            raise ValueError("a return series needs at least 1 observation")
        if self.kind not in ("log", "simple"):
            raise ValueError(f"unknown return kind {self.kind!r}")
        if not np.all(np.isfinite(r)):
            raise ValueError("returns must be finite")
        if self.kind == "simple" and np.any(r <= -1.0):
            raise ValueError("simple returns must be > -1")
        if int(self.periods_per_year) < 1:
            raise ValueError("periods_per_year must be a positive integer")

    def __len__(self):
        return len(self.returns)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.returns, dtype=dtype)

    def __eq__(self, other):
        if not isinstance(other, ReturnSeries):
            return NotImplemented
        return (
            self.kind == other.kind
            and self.periods_per_year == other.periods_per_year
            and np.array_equal(self.returns, other.returns)
        )

    __hash__ = None


def as_array(series) -> np.ndarray:
    """Return the raw float array behind a ReturnSeries or any 1-d sequence."""
    if isinstance(series, ReturnSeries):
        return series.returns
    arr = np.asarray(series, dtype=float)
    if arr.ndim != 1:
        raise ValueError("expected a 1-d series")
    return arr


@dataclass(frozen=True)
class SeriesStats:
    """Descriptive statistics. Moments that need more data than available are ``None``."""

    count: int
    mean: float
    variance: float | None
    std: float | None
    skewness: float | None
    excess_kurtosis: float | None
    min: float
    max: float


def load_price_series(source: BinaryIO | TextIO | bytes | str, periods_per_year: int = 252) -> PriceSeries:
    """Parse ``date,price`` CSV text into a :class:`PriceSeries`.

    ``source`` may be a binary or text stream, or the raw CSV content as
    ``bytes``/``str``. Rows may arrive in any order; they are sorted by date.
    Errors name the 1-based line number of the offending row.
    """
    if isinstance(source, bytes):
        text = source.decode("utf-8-sig")
    elif isinstance(source, str):
        text = source
    else:
        raw = source.read()
        text = raw.decode("utf-8-sig") if isinstance(raw, bytes) else raw
    text = text.lstrip("﻿")

    rows = list(csv.reader(io.StringIO(text)))
    if not rows or [c.strip().lower() for c in rows[0]] != ["date", "price"]:
        raise ValueError("line 1: expected header 'date,price'")

    observations: dict[date, float] = {}
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 2:
            raise ValueError(f"line {lineno}: expected 2 fields, got {len(row)}")
        d_txt, p_txt = row[0].strip(), row[1].strip()
        if not _DATE_RE.match(d_txt):
            raise ValueError(f"line {lineno}: malformed date {d_txt!r}")
        try:
            day = date.fromisoformat(d_txt)
        except ValueError:
            raise ValueError(f"line {lineno}: invalid date {d_txt!r}") from None
        if not _NUMBER_RE.match(p_txt):
            raise ValueError(f"line {lineno}: malformed price {p_txt!r}")
        price = float(p_txt)
        if not np.isfinite(price) or price <= 0:
            raise ValueError(f"line {lineno}: non-positive price {p_txt}")
        if day in observations:
            raise ValueError(f"line {lineno}: duplicate date {d_txt}")
        observations[day] = price

    if len(observations) < 2:
        raise ValueError(f"need at least 2 price rows, got {len(observations)}")
    days = sorted(observations)
    return PriceSeries(
        dates=np.array(days, dtype="datetime64[D]"),
        prices=np.array([observations[d] for d in days]),
        periods_per_year=int(periods_per_year),
    )


def to_returns(prices: PriceSeries, kind: ReturnKind = "log") -> ReturnSeries:
    """Period returns between consecutive observations.

    ``log`` gives ``ln(p_t / p_{t-1})``, ``simple`` gives ``p_t / p_{t-1} - 1``.
    """
    p = prices.prices
    ratio = p[1:] / p[:-1]
    if kind == "log":
        r = np.log(ratio)
    elif kind == "simple":
        r = ratio - 1.0
    else:
        raise ValueError(f"unknown return kind {kind!r}")
    return ReturnSeries(r, kind=kind, periods_per_year=prices.periods_per_year)


def summary_stats(series) -> SeriesStats:
    """Sample moments of a return series.

    Variance uses the unbiased ``n - 1`` divisor. With ``m_k`` the k-th central
    moment about the mean (divisor ``n``):

    * skewness is the adjusted Fisher-Pearson coefficient
      ``G1 = sqrt(n(n-1)) / (n-2) * m3 / m2**1.5`` (needs ``n >= 3``);
    * excess kurtosis is
      ``G2 = (n-1) / ((n-2)(n-3)) * ((n+1) * m4 / m2**2 - 3(n-1))`` (needs ``n >= 4``).

    Skewness and kurtosis are ``None`` for a constant series.
    """
    x = as_array(series)
    n = len(x)
    if n < 1:
        raise ValueError("empty series")
    if np.all(x == x[0]):
        constant = float(x[0])
        zero = 0.0 if n >= 2 else None
        return SeriesStats(n, constant, zero, zero, None, None, constant, constant)
    mean = float(np.mean(x))
    variance = std = skew = kurt = None
    if n >= 2:
        d = x - mean
        variance = float(np.sum(d * d) / (n - 1))
        std = float(np.sqrt(variance))
        # moments of deviations rescaled to unit max, so tiny spreads do not underflow
        u = d / np.max(np.abs(d))
        z = u / np.sqrt(np.mean(u * u))
        if n >= 3:
            skew = float(np.sqrt(n * (n - 1)) / (n - 2) * np.mean(z**3))
        if n >= 4:
            kurt = float((n - 1) / ((n - 2) * (n - 3)) * ((n + 1) * np.mean(z**4) - 3 * (n - 1)))
    return SeriesStats(
        count=n,
        mean=mean,
        variance=variance,
        std=std,
        skewness=skew,
        excess_kurtosis=kurt,
        min=float(np.min(x)),
        max=float(np.max(x)),
    )

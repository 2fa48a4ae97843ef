"""Monthly series container and elementary transforms.

Normalisation, logarithmic returns, cumulative sums, the rescaled-range
Hurst exponent and the (price, return) phase-space export.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from scipy.special import gammaln

from .errors import InsufficientData, NonPositiveValue, ZeroVariance

YearMonth = Tuple[int, int]


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


def shift_month(period: YearMonth, offset: int) -> YearMonth:
    """Return ``period`` moved by ``offset`` calendar months."""
    year, month = period
    k = year * 12 + (month - 1) + offset
    return k // 12, k % 12 + 1


def format_month(period: YearMonth) -> str:
    return f"{period[0]:04d}-{period[1]:02d}"


@dataclass(frozen=True)
class TimeSeries:
    """Uniformly sampled monthly sequence; index ``i`` is ``start_period + i`` months."""

    values: np.ndarray
    start_period: YearMonth = (1986, 1)
    label: str = ""

    def __post_init__(self):
        arr = _frozen(self.values)
        if arr.ndim != 1 or arr.size < 2:
            raise InsufficientData("a TimeSeries needs at least 2 values")
        if not np.all(np.isfinite(arr)):
            raise ValueError("TimeSeries values must be finite")
        year, month = self.start_period
        if not 1 <= int(month) <= 12:
            raise ValueError(f"invalid month in start_period: {self.start_period}")
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "start_period", (int(year), int(month)))

    def __len__(self) -> int:
        return self.values.size

    def months(self) -> List[str]:
        return [format_month(shift_month(self.start_period, i)) for i in range(len(self))]

    def replace(self, values, offset: int = 0) -> "TimeSeries":
        """New series with the same label, starting ``offset`` months later."""
        return TimeSeries(values, shift_month(self.start_period, offset), self.label)


@dataclass(frozen=True)
class ReturnSeries:
    """Log returns; ``values[n] = log x[n+1] - log x[n]``."""

    values: np.ndarray
    normalized: bool = False
    start_period: YearMonth = (1986, 2)
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values))

    def __len__(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class HurstEstimate:
    exponent: float
    window_sizes: List[int]
    rs_values: List[float]
    fit_stderr: float
    correction: Optional[str] = None


def _as_array(series) -> np.ndarray:
    if isinstance(series, (TimeSeries, ReturnSeries)):
        return np.asarray(series.values, dtype=float)
    return np.asarray(series, dtype=float)


def normalize_by_std(series: TimeSeries) -> TimeSeries:
    """Divide by the sample (N-1) standard deviation."""
    sd = np.std(series.values, ddof=1)
    if not sd > 0:
        raise ZeroVariance(f"series {series.label!r} has zero variance")
    return series.replace(series.values / sd)


def mean_subtract(series: TimeSeries) -> TimeSeries:
    centred = series.values - series.values.mean()
    # second pass removes the rounding residue of the first
    return series.replace(centred - centred.mean())


def log_returns(series: TimeSeries, normalize: bool = False) -> ReturnSeries:
    """Logarithmic returns, optionally standardised by the volatility of returns.

    With ``normalize`` the returns become ``(R - <R>) / sqrt(<R^2> - <R>^2)``,
    i.e. the moments are population (1/N) averages.
    """
    x = series.values
    if np.any(x <= 0):
        bad = int(np.flatnonzero(x <= 0)[0])
        raise NonPositiveValue(f"value at index {bad} is not strictly positive: {x[bad]!r}")
    r = np.diff(np.log(x))
    if normalize:
        centred = r - r.mean()
        vol = np.sqrt(np.mean(centred**2))
        # relative test: constant-growth inputs leave only log/diff rounding
        if not vol > 1e-12 * max(1.0, float(np.max(np.abs(r)))):
            raise ZeroVariance("returns are constant; volatility is zero")
        r = centred / vol
        r = r - r.mean()
        r = r / np.std(r)
    return ReturnSeries(r, normalize, shift_month(series.start_period, 1), series.label)


def cumulative_sum(returns) -> TimeSeries:
    """Running sum of a return series (the random-walk profile)."""
    values = np.cumsum(_as_array(returns))
    if isinstance(returns, ReturnSeries):
        return TimeSeries(values, returns.start_period, returns.label)
    return TimeSeries(values)


def _expected_rs(w: int) -> float:
    # Anis-Lloyd expected R/S of i.i.d. Gaussian blocks with the Peters (n-1/2)/n factor
    i = np.arange(1, w)
    tail = np.sum(np.sqrt((w - i) / i))
    ratio = np.exp(gammaln((w - 1) / 2) - gammaln(w / 2)) / np.sqrt(np.pi)
    return float((w - 0.5) / w * ratio * tail)


def _rescaled_range(x: np.ndarray, w: int) -> float:
    nblocks = x.size // w
    blocks = x[: nblocks * w].reshape(nblocks, w)
    blocks = blocks - blocks.mean(axis=1, keepdims=True)
    profile = np.cumsum(blocks, axis=1)
    r = profile.max(axis=1) - profile.min(axis=1)
    s = blocks.std(axis=1)
    keep = s > 0
    if not np.any(keep):
        raise ZeroVariance(f"every block of size {w} is constant")
    return float(np.mean(r[keep] / s[keep]))


def hurst_rs(series, min_window: int = 8, max_window: Optional[int] = None,
             correction: Optional[str] = None) -> HurstEstimate:
    """Rescaled-range estimate of the Hurst exponent.

    Window sizes are the dyadic grid ``min_window * 2**k`` up to ``max_window``
    (default ``N // 2``). For each size the series is cut into non-overlapping
    blocks; R/S is averaged over blocks and the exponent is the OLS slope of
    ``log(R/S)`` against ``log(window)``.

    Parameters
    ----------
    series : ReturnSeries or array-like
    min_window, max_window : int
        Smallest and largest window. ``max_window`` must leave at least two
        blocks.
    correction : {None, "anis-lloyd"}
        ``"anis-lloyd"`` regresses ``log(R/S) - log(E[R/S])`` where the
        expectation is the i.i.d. Gaussian value, and adds 0.5 to the slope.
        This removes the small-window upward bias of the classical estimator.
    """
    x = _as_array(series)
    n = x.size
    if min_window < 8:
        raise ValueError("min_window must be at least 8")
    if n < 2 * min_window:
        raise InsufficientData(f"need at least {2 * min_window} points, got {n}")
    if max_window is None:
        max_window = n // 2
    if n // max_window < 2:
        raise InsufficientData(f"max_window={max_window} leaves fewer than 2 blocks")
    if correction not in (None, "anis-lloyd"):
        raise ValueError(f"unknown correction {correction!r}")

    windows = []
    w = min_window
    while w <= max_window:
        windows.append(w)
        w *= 2
    if len(windows) < 2:
        raise InsufficientData("fewer than two window sizes between min_window and max_window")

    rs = np.array([_rescaled_range(x, w) for w in windows])
    logw = np.log(np.asarray(windows, dtype=float))
    y = np.log(rs)
    if correction == "anis-lloyd":
        y = y - np.log([_expected_rs(w) for w in windows])
    slope, intercept = np.polyfit(logw, y, 1)
    resid = y - (slope * logw + intercept)
    dof = len(windows) - 2
    sxx = np.sum((logw - logw.mean()) ** 2)
    stderr = float(np.sqrt(np.sum(resid**2) / dof / sxx)) if dof > 0 else 0.0
    if correction == "anis-lloyd":
        slope += 0.5
    return HurstEstimate(float(slope), windows, rs.tolist(), stderr, correction)


def phase_space(series: TimeSeries) -> List[Tuple[float, float]]:
    """(price, return) pairs ``(x[n], R(n))`` for n = 0..N-2, in index order."""
    if len(series) < 3:
        raise InsufficientData("phase space needs at least 3 values")
    r = log_returns(series).values
    return list(zip(series.values[:-1].tolist(), r.tolist()))

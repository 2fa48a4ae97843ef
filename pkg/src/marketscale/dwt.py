"""Daubechies-4 multiresolution split into average behaviour and fluctuations.

The forward transform is the usual pyramid: at every level the current
approximation is extended past both ends, filtered with the low/high-pass
pair and downsampled by two. ``trend_reconstruct`` inverts the pyramid with
all details zeroed; fluctuations are what that trend leaves behind.

Boundary modes
--------------
``"symmetric"``   half-sample reflection ``x[-1] = x[0]``
``"reflect"``     whole-sample reflection ``x[-1] = x[1]``
``"antireflect"`` point reflection ``x[-k] = 2 x[0] - x[k]``; keeps straight
                  lines straight, so ramps have no detail anywhere
``"periodic"``    circular wrap, ``ceil(N/2)`` coefficients; orthonormal when
                  every level has even length (odd ones repeat the last sample)

The three extension modes are expansive (``floor((N + 3) / 2)`` coefficients
per level) and reconstruct perfectly; only ``"periodic"`` conserves energy.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from .errors import InsufficientData
from .series import TimeSeries

_SQRT3 = np.sqrt(3.0)
DB4_LOWPASS = np.array([1 + _SQRT3, 3 + _SQRT3, 3 - _SQRT3, 1 - _SQRT3]) / (4 * np.sqrt(2.0))
# quadrature mirror: g[k] = (-1)^k h[L-1-k]
DB4_HIGHPASS = DB4_LOWPASS[::-1] * np.array([1.0, -1.0, 1.0, -1.0])

MODES = ("symmetric", "reflect", "antireflect", "periodic")
DEFAULT_MODE = "antireflect"
_L = 4


@dataclass(frozen=True)
class WaveletFilterPair:
    lowpass: np.ndarray
    highpass: np.ndarray


DB4 = WaveletFilterPair(DB4_LOWPASS, DB4_HIGHPASS)


@dataclass(frozen=True)
class WaveletCoefficients:
    """Pyramid output: final approximation plus details ordered level 1..J."""

    approx: np.ndarray
    details: List[np.ndarray]
    lengths: List[int]  # input length at each level, lengths[0] == len(series)
    mode: str

    @property
    def level(self) -> int:
        return len(self.details)


@dataclass(frozen=True)
class MultiScaleDecomposition:
    level_count: int
    trends: List[np.ndarray]
    fluctuations: List[np.ndarray]
    symmetrized: bool
    mode: str = DEFAULT_MODE
    start_period: Tuple[int, int] = (1986, 1)
    label: str = ""

    def timescale_months(self, level: int) -> int:
        """Nominal time scale attached to a level, 2**level months."""
        return 2**level


def _extend(x: np.ndarray, left: int, right: int, mode: str) -> np.ndarray:
    n = x.size
    if mode == "symmetric":
        idx = np.arange(-left, n + right)
        period = 2 * n
        idx = np.mod(idx, period)
        idx = np.where(idx >= n, period - 1 - idx, idx)
        return x[idx]
    if mode == "reflect":
        if n < 2:
            return np.full(n + left + right, x[0])
        idx = np.arange(-left, n + right)
        period = 2 * n - 2
        idx = np.mod(idx, period)
        idx = np.where(idx >= n, period - idx, idx)
        return x[idx]
    if mode == "antireflect":
        # point reflection about each end; iterate for extensions longer than n
        ext = x.copy()
        ext_left = 0
        while ext_left < left or ext.size - ext_left - n < right:
            m = ext.size
            head = 2 * ext[0] - ext[1:m][::-1]
            tail = 2 * ext[-1] - ext[: m - 1][::-1]
            ext = np.concatenate([head, ext, tail])
            ext_left += m - 1
        start = ext_left - left
        return ext[start:start + n + left + right]
    raise ValueError(f"unknown boundary mode {mode!r}")


def _analysis_step(x: np.ndarray, mode: str, filters: WaveletFilterPair) -> Tuple[np.ndarray, np.ndarray]:
    h, g = filters.lowpass, filters.highpass
    n = x.size
    if mode == "periodic":
        if n % 2:
            x = np.append(x, x[-1])
            n += 1
        k = np.arange(n // 2)
        idx = (2 * k[:, None] - 1 + np.arange(_L)[None, :]) % n
        block = x[idx]
        return block @ h, block @ g
    count = (n + _L - 1) // 2
    ext = _extend(x, _L - 2, 2 * count - n, mode)
    # coefficient i sees x[2i - 2 .. 2i + 1]
    idx = 2 * np.arange(count)[:, None] + np.arange(_L)[None, :]
    block = ext[idx]
    return block @ h, block @ g


def _synthesis_step(approx: np.ndarray, detail: np.ndarray, n: int, mode: str,
                    filters: WaveletFilterPair) -> np.ndarray:
    h, g = filters.lowpass, filters.highpass
    count = approx.size
    if mode == "periodic":
        m = 2 * count
        out = np.zeros(m)
        k = np.arange(count)
        for j in range(_L):
            np.add.at(out, (2 * k - 1 + j) % m, h[j] * approx + g[j] * detail)
        return out[:n]
    out = np.zeros(2 * count + _L)
    k = np.arange(count)
    for j in range(_L):
        np.add.at(out, 2 * k + j, h[j] * approx + g[j] * detail)
    # out[t] holds sample t - 2
    return out[_L - 2:_L - 2 + n]


def _check_mode(mode: str) -> None:
    if mode not in MODES:
        raise ValueError(f"unknown boundary mode {mode!r}; choose from {MODES}")


def dwt_level(series, level: int, mode: str = DEFAULT_MODE,
              filters: WaveletFilterPair = DB4) -> WaveletCoefficients:
    """Multi-level forward transform.

    Raises
    ------
    InsufficientData
        If ``series`` is shorter than 4 samples or a level would start from,
        or leave, fewer than two approximation coefficients. Levels beyond
        :func:`max_level` are accepted as long as that holds.
    """
    _check_mode(mode)
    x = np.asarray(getattr(series, "values", series), dtype=float)
    if level < 1:
        raise ValueError("level must be >= 1")
    if x.size < 4:
        raise InsufficientData("DWT needs at least 4 samples")
    details, lengths = [], []
    approx = x
    for j in range(1, level + 1):
        if approx.size < 2:
            raise InsufficientData(f"level {j} exceeds what {x.size} samples support")
        lengths.append(approx.size)
        approx, d = _analysis_step(approx, mode, filters)
        if approx.size < 2:
            raise InsufficientData(f"level {j} leaves fewer than 2 approximation coefficients")
        details.append(d)
    return WaveletCoefficients(approx, details, lengths, mode)


def idwt(coeffs: WaveletCoefficients, filters: WaveletFilterPair = DB4) -> np.ndarray:
    approx = coeffs.approx
    for d, n in zip(reversed(coeffs.details), reversed(coeffs.lengths)):
        approx = _synthesis_step(approx, d, n, coeffs.mode, filters)
    return approx


def max_level(n: int, mode: str = DEFAULT_MODE) -> int:
    """Deepest level at which every step still shrinks the approximation.

    :func:`dwt_level` accepts deeper levels on short series, as PyWavelets
    does, but there the boundary extension dominates every coefficient.
    """
    _check_mode(mode)
    level, size = 0, n
    while size >= (2 if mode == "periodic" else _L):
        size = (size + 1) // 2 if mode == "periodic" else (size + _L - 1) // 2
        if size < 2:
            break
        level += 1
    return level


def trend_reconstruct(series, level: int, mode: str = DEFAULT_MODE) -> np.ndarray:
    """Average behaviour: inverse transform with details of levels 1..``level`` zeroed."""
    c = dwt_level(series, level, mode)
    zeroed = WaveletCoefficients(c.approx, [np.zeros_like(d) for d in c.details], c.lengths, mode)
    return idwt(zeroed)


def fluctuations(series, level: int, symmetrize: bool = True, mode: str = DEFAULT_MODE) -> np.ndarray:
    """Series minus its level-``level`` trend.

    With ``symmetrize`` the fluctuations of the time-reversed series are
    reversed back and averaged with the forward ones, cancelling the
    directional bias of the asymmetric Db-4 filters.
    """
    x = np.asarray(getattr(series, "values", series), dtype=float)
    forward = x - trend_reconstruct(x, level, mode)
    if not symmetrize:
        return forward
    rev = x[::-1]
    backward = (rev - trend_reconstruct(rev, level, mode))[::-1]
    return 0.5 * (forward + backward)


def decompose(series: TimeSeries, max_level: int = 4, symmetrize: bool = True,
              mode: str = DEFAULT_MODE) -> MultiScaleDecomposition:
    x = np.asarray(getattr(series, "values", series), dtype=float)
    dwt_level(x, max_level, mode)  # fail early if max_level is infeasible
    trends, flucts = [], []
    for j in range(1, max_level + 1):
        f = fluctuations(x, j, symmetrize, mode)
        flucts.append(f)
        trends.append(x - f)
    start = getattr(series, "start_period", (1986, 1))
    label = getattr(series, "label", "")
    return MultiScaleDecomposition(max_level, trends, flucts, symmetrize, mode, start, label)


def variance_by_level(decomp: MultiScaleDecomposition) -> Tuple[List[float], List[float]]:
    """Sample (N-1) variances of the trend and fluctuation banks, level 1..J."""
    tv = [float(np.var(t, ddof=1)) for t in decomp.trends]
    fv = [float(np.var(f, ddof=1)) for f in decomp.fluctuations]
    return tv, fv

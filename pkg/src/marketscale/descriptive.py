"""Distributional statistics: moments, correlation, KDE, quantiles, boxplots, normality tests."""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Tuple, Union

import numpy as np
from scipy import stats
from statsmodels.stats.diagnostic import lilliefors

from .errors import LengthMismatch, OutOfRange, ZeroVariance

# notch half-width factor, ~95% interval for the difference of two medians
NOTCH_FACTOR = 1.57
WHISKER_FACTOR = 1.5
# kde grid padding in bandwidths; 3h would drop 0.27% of an isolated kernel's mass
GRID_PAD = 4.0
# finest kde grid spacing in bandwidths, and the point cap that refinement respects
GRID_STEP = 1.0 / 8
GRID_MAX_POINTS = 1 << 20


@dataclass(frozen=True)
class MomentSummary:
    mean: float
    variance: float
    skewness: float
    kurtosis: float  # non-excess; 3 for a normal distribution


@dataclass(frozen=True)
class CorrelationPair:
    pearson: float
    spearman: float
    n: int


@dataclass(frozen=True)
class KernelDensity:
    grid: np.ndarray
    density: np.ndarray
    bandwidth: float


@dataclass(frozen=True)
class OutlierReport:
    q1: float
    q2: float
    q3: float
    whisker_lo: float
    whisker_hi: float
    outlier_indices: List[int]
    notch_lo: float
    notch_hi: float

    @property
    def iqr(self) -> float:
        return self.q3 - self.q1


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float
    null_hypothesis: str
    rejected_at_5pct: bool
    df: Optional[float] = None

    __test__ = False  # keep pytest from collecting this class


def _vector(data) -> np.ndarray:
    x = np.asarray(data, dtype=float).ravel()
    if not np.all(np.isfinite(x)):
        raise ValueError("data must be finite")
    return x


def moments(data) -> MomentSummary:
    """Population-style moment ratios ``m3/m2**1.5`` and ``m4/m2**2``."""
    x = _vector(data)
    if x.size < 4:
        raise OutOfRange(f"moments need n >= 4, got {x.size}")
    d = x - x.mean()
    m2 = np.mean(d**2)
    if m2 == 0:
        raise ZeroVariance("constant data has no moment ratios")
    m3 = np.mean(d**3)
    m4 = np.mean(d**4)
    return MomentSummary(float(x.mean()), float(m2), float(m3 / m2**1.5), float(m4 / m2**2))


def _paired(x, y) -> Tuple[np.ndarray, np.ndarray]:
    x, y = _vector(x), _vector(y)
    if x.size != y.size:
        raise LengthMismatch(f"lengths differ: {x.size} vs {y.size}")
    if x.size < 3:
        raise OutOfRange("correlation needs n >= 3")
    return x, y


def pearson(x, y) -> float:
    x, y = _paired(x, y)
    dx, dy = x - x.mean(), y - y.mean()
    sxx, syy = np.dot(dx, dx), np.dot(dy, dy)
    if sxx == 0 or syy == 0:
        raise ZeroVariance("pearson correlation of a constant vector")
    r = np.dot(dx, dy) / np.sqrt(sxx * syy)
    return float(np.clip(r, -1.0, 1.0))


def rank(x) -> np.ndarray:
    """Mid-ranks (1-based, ties averaged)."""
    return stats.rankdata(_vector(x), method="average")


def spearman(x, y) -> float:
    x, y = _paired(x, y)
    return pearson(rank(x), rank(y))


def correlation_pair(x, y) -> CorrelationPair:
    return CorrelationPair(pearson(x, y), spearman(x, y), int(np.size(x)))


def silverman_bandwidth(data) -> float:
    x = _vector(data)
    sd = np.std(x, ddof=1)
    q75, q25 = np.percentile(x, [75, 25])
    spread = min(sd, (q75 - q25) / 1.34)
    if spread <= 0:
        spread = sd
    if not spread > 0:
        raise ZeroVariance("automatic bandwidth undefined for constant data")
    return float(0.9 * spread * x.size ** (-0.2))


def kde(data, bandwidth: Union[float, str] = "auto", grid_size: int = 512) -> KernelDensity:
    """Gaussian kernel density estimate on ``[min - 4h, max + 4h]``.

    ``bandwidth="auto"`` uses Silverman's rule ``0.9 min(sd, IQR/1.34) n^(-1/5)``.
    ``grid_size`` is a minimum: widely spread data get a denser grid so the
    spacing never exceeds ``h / 8``.
    """
    x = _vector(data)
    if x.size < 2:
        raise OutOfRange("kde needs at least 2 points")
    if grid_size < 64:
        raise OutOfRange("grid_size must be at least 64")
    h = silverman_bandwidth(x) if bandwidth == "auto" else float(bandwidth)
    if not h > 0:
        raise ValueError("bandwidth must be positive")
    lo, hi = x.min() - GRID_PAD * h, x.max() + GRID_PAD * h
    needed = int(np.ceil((hi - lo) / (GRID_STEP * h))) + 1
    grid_size = max(grid_size, min(needed, GRID_MAX_POINTS))
    grid = np.linspace(lo, hi, grid_size)
    density = np.zeros(grid_size)
    # chunk over data points to keep memory bounded for long inputs
    for start in range(0, x.size, 2048):
        u = (grid[:, None] - x[None, start:start + 2048]) / h
        density += np.exp(-0.5 * u * u).sum(axis=1)
    density /= x.size * h * np.sqrt(2 * np.pi)
    return KernelDensity(grid, density, h)


def count_modes(density: KernelDensity, min_prominence: float = 0.05) -> int:
    """Number of local maxima higher than ``min_prominence`` times the global maximum."""
    f = density.density
    peaks = (f[1:-1] > f[:-2]) & (f[1:-1] >= f[2:])
    return int(np.sum(f[1:-1][peaks] >= min_prominence * f.max()))


def quantile_compare(data, standardize: bool = True) -> List[Tuple[float, float]]:
    """Normal quantile-quantile points ``(theoretical, sample)``.

    Theoretical quantiles sit at plotting positions ``(i - 0.5) / n``. With
    ``standardize`` they are mapped onto the sample scale as ``mean + sd * z``
    so that normal data fall on the line ``y = x``.
    """
    x = np.sort(_vector(data))
    n = x.size
    if n < 10:
        raise OutOfRange("quantile comparison needs n >= 10")
    z = stats.norm.ppf((np.arange(1, n + 1) - 0.5) / n)
    if standardize:
        z = x.mean() + np.std(x, ddof=1) * z
    return list(zip(z.tolist(), x.tolist()))


def _fences(x: np.ndarray) -> Tuple[float, float, float, float, float]:
    q1, q2, q3 = np.percentile(x, [25, 50, 75])
    iqr = q3 - q1
    return q1, q2, q3, q1 - WHISKER_FACTOR * iqr, q3 + WHISKER_FACTOR * iqr


def boxplot_stats(data) -> OutlierReport:
    """Quartiles, 1.5 IQR whiskers, outliers and median notches."""
    x = _vector(data)
    if x.size < 5:
        raise OutOfRange("boxplot needs n >= 5")
    q1, q2, q3, lo, hi = _fences(x)
    inside = (x >= lo) & (x <= hi)
    half_notch = NOTCH_FACTOR * (q3 - q1) / np.sqrt(x.size)
    return OutlierReport(
        q1=float(q1), q2=float(q2), q3=float(q3),
        whisker_lo=float(x[inside].min()), whisker_hi=float(x[inside].max()),
        outlier_indices=np.flatnonzero(~inside).tolist(),
        notch_lo=float(q2 - half_notch), notch_hi=float(q2 + half_notch),
    )


def remove_outliers(data) -> np.ndarray:
    """Drop points outside the 1.5 IQR fences (single pass)."""
    x = _vector(data)
    if x.size < 5:
        raise OutOfRange("outlier removal needs n >= 5")
    _, _, _, lo, hi = _fences(x)
    return x[(x >= lo) & (x <= hi)]


def shapiro_wilk(data) -> TestResult:
    """Shapiro-Wilk W with Royston's AS R94 p-value (scipy's implementation)."""
    x = _vector(data)
    if not 3 <= x.size <= 5000:
        raise OutOfRange(f"Shapiro-Wilk needs 3 <= n <= 5000, got {x.size}")
    w, p = stats.shapiro(x)
    p = float(np.clip(p, 0.0, 1.0))
    return TestResult(float(w), p, "data are normally distributed", p < 0.05)


def ks_normal(data, correction: Optional[str] = "lilliefors") -> TestResult:
    """One-sample KS of the standardised data against N(0, 1).

    Mean and standard deviation are estimated from the data, which makes the
    plain Kolmogorov p-value far too conservative. ``correction="lilliefors"``
    (default) uses the Dallal-Wilkinson approximation to the Lilliefors
    distribution; ``correction=None`` returns the asymptotic Kolmogorov value.
    """
    x = _vector(data)
    if x.size < 10:
        raise OutOfRange("KS test needs n >= 10")
    sd = np.std(x, ddof=1)
    if sd == 0:
        raise ZeroVariance("KS test of constant data")
    if correction == "lilliefors":
        d, p = lilliefors(x, dist="norm", pvalmethod="approx")
    elif correction is None:
        res = stats.kstest((x - x.mean()) / sd, "norm", method="asymp")
        d, p = res.statistic, res.pvalue
    else:
        raise ValueError(f"unknown correction {correction!r}")
    p = float(np.clip(p, 0.0, 1.0))
    return TestResult(float(d), p, "data are normally distributed", p < 0.05)

"""Morlet continuous wavelet analysis.

Scalograms are computed by frequency-domain convolution with the
L2-normalised Morlet daughter wavelets

    psi_hat(s w) = sqrt(2 pi s) pi^(-1/4) H(w) exp(-(s w - w0)^2 / 2)

so a sinusoid of period T peaks at the scale ``T / 1.033``. Coefficient
arrays are shaped ``(n_scales, n_times)``. Phases follow the convention
``arg W`` increasing with time for a cosine; for a cross spectrum
``W_a conj(W_b)`` a positive angle means the first series leads.

Coherence uses the Gaussian-in-time / boxcar-in-scale smoother of the
cross-wavelet literature, with per-cell significance from AR(1) surrogate
pairs.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from scipy import fft as sfft
from scipy.signal import lfilter

from .errors import EmptyScale, GridMismatch, GridTooFine, NonStationaryFit, OutOfGrid

OMEGA0 = 6.0


def fourier_factor(omega0: float = OMEGA0) -> float:
    """Ratio of Fourier wavelength to scale, ``4 pi / (w0 + sqrt(2 + w0^2))``."""
    return 4 * np.pi / (omega0 + np.sqrt(2 + omega0**2))


@dataclass(frozen=True)
class ScaleGrid:
    """Dyadic scale grid ``s_j = s0 * 2**(j * dj)``; scales in months."""

    s0: float = 2.0
    dj: float = 1.0 / 12
    count: Optional[int] = None
    max_scale: float = 128.0

    def __post_init__(self):
        if self.count is None:
            n = int(np.floor(np.log2(self.max_scale / self.s0) / self.dj + 1e-9)) + 1
            object.__setattr__(self, "count", n)
        if self.count < 1 or self.dj <= 0:
            raise ValueError("scale grid needs count >= 1 and dj > 0")

    @property
    def scales(self) -> np.ndarray:
        return self.s0 * 2.0 ** (np.arange(self.count) * self.dj)

    def fourier_wavelength(self, omega0: float = OMEGA0) -> np.ndarray:
        return fourier_factor(omega0) * self.scales


@dataclass(frozen=True)
class Scalogram:
    coefficients: np.ndarray  # complex, (n_scales, n_times)
    grid: ScaleGrid
    coi: np.ndarray  # largest reliable scale at each time, months
    omega0: float = OMEGA0
    series: Optional[np.ndarray] = field(default=None, repr=False)
    pad: str = "zero"

    @property
    def scales(self) -> np.ndarray:
        return self.grid.scales

    @property
    def periods(self) -> np.ndarray:
        return self.grid.fourier_wavelength(self.omega0)

    @property
    def power(self) -> np.ndarray:
        return np.abs(self.coefficients) ** 2

    def inside_coi(self) -> np.ndarray:
        """Boolean mask of cells free of edge effects."""
        return self.scales[:, None] <= self.coi[None, :]


@dataclass(frozen=True)
class CrossSpectrum:
    values: np.ndarray
    phase: np.ndarray


@dataclass(frozen=True)
class CoherenceMap:
    coherence: np.ndarray
    phase: np.ndarray
    significant: np.ndarray
    threshold: np.ndarray
    alpha: float
    surrogate_count: int
    seed: Optional[int]
    inside_coi: np.ndarray


def cone_of_influence(n: int) -> np.ndarray:
    """e-folding reach of the Morlet envelope: scale ``d / sqrt(2)`` at distance ``d`` from the nearest edge."""
    t = np.arange(n)
    return np.minimum(t, n - 1 - t) / np.sqrt(2.0)


def _angular_frequencies(m: int) -> np.ndarray:
    return 2 * np.pi * sfft.fftfreq(m)


def _wavelet_bank(scales: np.ndarray, m: int, omega0: float) -> np.ndarray:
    w = _angular_frequencies(m)
    sw = scales[:, None] * w[None, :]
    bank = np.sqrt(2 * np.pi * scales)[:, None] * np.pi**-0.25 * np.exp(-0.5 * (sw - omega0) ** 2)
    bank[:, w <= 0] = 0.0
    return bank


def _padded_length(n: int, pad: str) -> int:
    if pad == "periodic":
        return n
    if pad == "zero":
        return int(2 ** np.ceil(np.log2(2 * n)))
    raise ValueError(f"pad must be 'zero' or 'periodic', got {pad!r}")


def _transform(x: np.ndarray, scales: np.ndarray, omega0: float, pad: str) -> np.ndarray:
    """CWT of the last axis of ``x``; returns ``(..., n_scales, n)``."""
    n = x.shape[-1]
    m = _padded_length(n, pad)
    xf = sfft.fft(x, n=m, axis=-1)
    bank = _wavelet_bank(scales, m, omega0)
    return sfft.ifft(xf[..., None, :] * bank, axis=-1)[..., :n]


def morlet_cwt(series, grid: Optional[ScaleGrid] = None, omega0: float = OMEGA0,
               pad: str = "zero") -> Scalogram:
    """Morlet scalogram of a mean-subtracted series.

    Parameters
    ----------
    series : array-like or TimeSeries
        Must have ``|mean| < 1e-6``.
    grid : ScaleGrid, optional
        Defaults to ``ScaleGrid()`` (2 to 128 months, 12 voices per octave).
    pad : {"zero", "periodic"}
        ``"zero"`` pads to a power of two at least twice the length;
        ``"periodic"`` treats the series as circular.
    """
    x = np.asarray(getattr(series, "values", series), dtype=float)
    grid = grid or ScaleGrid()
    if grid.s0 < 2:
        raise GridTooFine(f"smallest scale {grid.s0} is below 2 samples")
    if abs(x.mean()) >= 1e-6:
        raise ValueError(f"series must be mean-subtracted (mean = {x.mean():.3g})")
    coeffs = _transform(x, grid.scales, omega0, pad)
    # capping at the top scale leaves the inside-COI mask unchanged
    coi = np.minimum(cone_of_influence(x.size), grid.scales[-1])
    return Scalogram(coeffs, grid, coi, omega0, x.copy(), pad)


def global_power(scalogram: Scalogram, exclude_coi: bool = False) -> np.ndarray:
    """Wavelet power summed over time, per scale.

    With ``exclude_coi`` only cells inside the cone of influence contribute and
    each sum is divided by its retained count. Scales with no retained cell are
    returned as NaN; if every scale is empty :class:`EmptyScale` is raised.
    """
    power = scalogram.power
    if not exclude_coi:
        return power.sum(axis=1)
    mask = scalogram.inside_coi()
    counts = mask.sum(axis=1)
    if not np.any(counts):
        raise EmptyScale("cone of influence excludes every scale")
    total = np.where(mask, power, 0.0).sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(counts > 0, total / np.maximum(counts, 1), np.nan)


def empty_scales(scalogram: Scalogram) -> np.ndarray:
    """Scales with no cell inside the cone of influence."""
    return ~scalogram.inside_coi().any(axis=1)


def nearest_scale_index(scalogram: Scalogram, period_months: float) -> int:
    periods = scalogram.periods
    if not periods[0] <= period_months <= periods[-1]:
        raise OutOfGrid(f"period {period_months} outside [{periods[0]:.3g}, {periods[-1]:.3g}]")
    dist = np.abs(periods - period_months)
    # argmin returns the first minimum, i.e. the smaller scale on ties
    return int(np.argmin(dist))


def band_coefficients(scalogram: Scalogram, period_months: float) -> Tuple[np.ndarray, np.ndarray]:
    """Real part and unwrapped phase of the coefficients nearest ``period_months``."""
    w = scalogram.coefficients[nearest_scale_index(scalogram, period_months)]
    return w.real.copy(), np.unwrap(np.angle(w))


def _check_same_grid(a: Scalogram, b: Scalogram) -> None:
    if a.coefficients.shape != b.coefficients.shape or not np.allclose(a.scales, b.scales):
        raise GridMismatch("scalograms differ in grid or length")


def cross_spectrum(a: Scalogram, b: Scalogram) -> CrossSpectrum:
    _check_same_grid(a, b)
    wa, wb = a.coefficients, b.coefficients
    # spelled out so that swapping the inputs conjugates bit for bit
    values = (wa.real * wb.real + wa.imag * wb.imag) + 1j * (wa.imag * wb.real - wa.real * wb.imag)
    return CrossSpectrum(values, np.angle(values))


class _Smoother:
    """Gaussian time smoothing (std = scale) followed by a 0.6-octave boxcar over scales.

    Both stages have non-negative weights, so the smoothed coherence obeys
    the Cauchy-Schwarz bound.
    """

    def __init__(self, scales: np.ndarray, n: int, dj: float, scale_window: float = 0.6):
        self.n = n
        half = np.minimum(np.ceil(4 * scales), n - 1).astype(int)
        self.m = int(sfft.next_fast_len(n + int(half.max())))
        t = np.arange(self.m)
        lag = np.minimum(t, self.m - t)
        kern = np.exp(-0.5 * (lag[None, :] / scales[:, None]) ** 2)
        kern[lag[None, :] > half[:, None]] = 0.0
        kern /= kern.sum(axis=1, keepdims=True)
        # the kernel is even, so its spectrum is real
        self.time_kernel = sfft.fft(kern, axis=-1).real
        steps = scale_window / (2 * dj)
        core = 2 * int(round(steps)) - 1
        frac = steps % 1 if steps % 1 else 0.0
        box = np.concatenate([[frac], np.ones(max(core, 1)), [frac]])
        box = box[box > 0] if frac == 0 else box
        box /= box.sum()
        k = box.size // 2
        count = scales.size
        mat = np.zeros((count, count))
        for i in range(count):
            for j, w in enumerate(box):
                col = i + j - k
                if 0 <= col < count:
                    mat[i, col] = w
        self.scale_matrix = mat

    def __call__(self, w: np.ndarray) -> np.ndarray:
        wf = sfft.fft(w, n=self.m, axis=-1) * self.time_kernel
        smoothed = sfft.ifft(wf, axis=-1)[..., : self.n]
        if not np.iscomplexobj(w):
            smoothed = smoothed.real
        return self.scale_matrix @ smoothed


def _coherence_from_coeffs(wa: np.ndarray, wb: np.ndarray, scales: np.ndarray,
                           smoother: Optional[_Smoother]) -> Tuple[np.ndarray, np.ndarray]:
    inv_s = (1.0 / scales)[:, None]
    cross = wa * np.conj(wb) * inv_s
    pa = np.abs(wa) ** 2 * inv_s
    pb = np.abs(wb) ** 2 * inv_s
    if smoother is not None:
        # the smoother is real linear, so both powers ride one complex pass
        packed = smoother(pa + 1j * pb)
        cross, pa, pb = smoother(cross), packed.real, packed.imag
    with np.errstate(invalid="ignore", divide="ignore"):
        coh = np.abs(cross) ** 2 / (pa * pb)
    # 0/0 only where both inputs vanish; not clipped so the bound stays testable
    coh = np.where(np.isfinite(coh), coh, 0.0)
    return coh, np.angle(cross)


def lag1_autocorrelation(x: np.ndarray) -> float:
    d = np.asarray(x, dtype=float) - np.mean(x)
    denom = np.dot(d, d)
    if denom == 0:
        return 0.0
    return float(np.dot(d[:-1], d[1:]) / denom)


def ar1_surrogates(n: int, phi: float, rng: np.random.Generator, count: int = 1,
                   burn: int = 200) -> np.ndarray:
    """AR(1) red-noise draws, each mean-subtracted and scaled to unit variance."""
    if abs(phi) >= 1:
        raise NonStationaryFit(f"AR(1) coefficient {phi:.4f} is not stationary")
    e = rng.standard_normal((count, n + burn))
    x = lfilter([1.0], [1.0, -phi], e, axis=-1)[:, burn:]
    x -= x.mean(axis=-1, keepdims=True)
    x /= x.std(axis=-1, keepdims=True)
    return x


def replicate_rng(seed: int, index: int) -> np.random.Generator:
    """Generator for one Monte Carlo replicate, independent of scheduling."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(index)]))


def coherence(a: Scalogram, b: Scalogram, alpha: float = 0.05, surrogates: int = 300,
              seed: int = 0, smooth: bool = True, workers: int = 1,
              chunk: int = 25) -> CoherenceMap:
    """Squared wavelet coherence with Monte Carlo significance.

    ``R^2 = |S(W_ab / s)|^2 / (S(|W_a|^2 / s) S(|W_b|^2 / s))``. Each of the
    ``surrogates`` replicates draws an AR(1) pair matched to the lag-1
    autocorrelations of the two inputs; a cell is significant when its
    coherence exceeds the per-cell ``1 - alpha`` quantile of the replicates.

    Replicate ``i`` is seeded from ``(seed, i)``, so the result does not
    depend on ``workers`` or ``chunk``.
    """
    _check_same_grid(a, b)
    if a.series is None or b.series is None:
        raise ValueError("coherence needs scalograms that carry their input series")
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    if surrogates * alpha < 15:
        raise ValueError(f"{surrogates} surrogates are too few for alpha={alpha}")
    scales = a.scales
    n = a.coefficients.shape[1]
    smoother = _Smoother(scales, n, a.grid.dj) if smooth else None
    coh, phase = _coherence_from_coeffs(a.coefficients, b.coefficients, scales, smoother)

    phi_a, phi_b = lag1_autocorrelation(a.series), lag1_autocorrelation(b.series)
    for phi in (phi_a, phi_b):
        if abs(phi) >= 1:
            raise NonStationaryFit(f"AR(1) coefficient {phi:.4f} is not stationary")

    def run(start: int, stop: int) -> np.ndarray:
        xa = np.empty((stop - start, n))
        xb = np.empty((stop - start, n))
        for k, i in enumerate(range(start, stop)):
            rng = replicate_rng(seed, i)
            xa[k] = ar1_surrogates(n, phi_a, rng)[0]
            xb[k] = ar1_surrogates(n, phi_b, rng)[0]
        wa = _transform(xa, scales, a.omega0, a.pad)
        wb = _transform(xb, scales, b.omega0, b.pad)
        return _coherence_from_coeffs(wa, wb, scales, smoother)[0]

    bounds = [(s, min(s + chunk, surrogates)) for s in range(0, surrogates, chunk)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda se: run(*se), bounds))
    else:
        parts = [run(*se) for se in bounds]
    stack = np.concatenate(parts, axis=0)
    threshold = np.quantile(stack, 1 - alpha, axis=0)
    return CoherenceMap(coh, phase, coh > threshold, threshold, alpha, surrogates, seed,
                        a.inside_coi())

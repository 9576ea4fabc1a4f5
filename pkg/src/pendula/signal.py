"""Analysis chain for pendulum traces.

Raw deflections are split into a slow quasistatic part and a fast
oscillation at the carrier.  Squared fast oscillations, low-pass filtered,
give the envelope intensities ``|Psi_k|^2`` and, after normalization, the
populations.  Smoothed Fourier spectra and Husimi time-frequency maps
estimate the instantaneous splitting of the modes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage
from scipy import signal as sps

from .errors import DegenerateSignalError, ResolutionError

__all__ = [
    "TimeSeries",
    "Spectrum",
    "HusimiMap",
    "gaussian_lowpass",
    "split_timescales",
    "envelope_sq",
    "mode_transform",
    "inverse_mode_transform",
    "populations",
    "spectrum",
    "refine_peak",
    "husimi",
    "window_average",
    "reconstruct_deflection",
]

TRUNCATE = 4.0  # kernel half-width in units of sigma


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """Uniformly sampled signal starting at `t0` with spacing `dt` (s)."""

    t0: float
    dt: float
    values: np.ndarray

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if np.ndim(self.values) != 1 or len(self.values) < 2:
            raise ValueError("values must be one-dimensional with at least two samples")

    def __len__(self):
        return len(self.values)

    @property
    def t(self):
        return self.t0 + self.dt * np.arange(len(self.values))

    @property
    def t_end(self):
        return self.t0 + self.dt * (len(self.values) - 1)

    def with_values(self, values):
        return TimeSeries(self.t0, self.dt, np.asarray(values))

    def same_grid(self, other):
        return (len(self) == len(other) and math.isclose(self.t0, other.t0, abs_tol=1e-12)
                and math.isclose(self.dt, other.dt, rel_tol=1e-12))


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Magnitude spectrum on a uniform grid of non-negative frequencies (Hz).

    ``peaks`` indexes local maxima of ``smoothed`` above the relative
    threshold.
    """

    frequencies: np.ndarray
    magnitudes: np.ndarray
    smoothed: np.ndarray
    smoothing_sigma: float
    peaks: np.ndarray

    @property
    def df(self):
        return float(self.frequencies[1] - self.frequencies[0])

    @property
    def peak_frequencies(self):
        return self.frequencies[self.peaks]

    @property
    def peak_heights(self):
        return self.smoothed[self.peaks]


@dataclass(frozen=True, eq=False)
class HusimiMap:
    """``Q[i, j]`` at ``t[i]`` (s) and ``omega[j]`` (rad/s); packet width `sigma` (s)."""

    t: np.ndarray
    omega: np.ndarray
    Q: np.ndarray
    sigma: float

    def ridge(self):
        """Frequency of maximal ``Q`` for every time."""
        return self.omega[np.argmax(self.Q, axis=1)]


def _check_sigma(series, sigma):
    if not sigma > series.dt:
        raise ResolutionError(
            f"filter width {sigma!r} s must exceed the sample spacing {series.dt!r} s")


def gaussian_lowpass(series, sigma):
    """Convolve with a unit-area Gaussian of width `sigma` (s).

    The kernel is truncated at four widths; edges are handled by mirror
    reflection so the output has the input length and the same sum.
    """
    _check_sigma(series, sigma)
    v = np.asarray(series.values)
    s = sigma / series.dt
    if np.iscomplexobj(v):
        out = (ndimage.gaussian_filter1d(v.real, s, mode="reflect", truncate=TRUNCATE)
               + 1j * ndimage.gaussian_filter1d(v.imag, s, mode="reflect", truncate=TRUNCATE))
    else:
        out = ndimage.gaussian_filter1d(v.astype(float), s, mode="reflect", truncate=TRUNCATE)
    return series.with_values(out)


def split_timescales(series_lab, sigma):
    """Return ``(xi, phi_fast)``: the low-passed trace and the remainder."""
    xi = gaussian_lowpass(series_lab, sigma)
    return xi, series_lab.with_values(series_lab.values - xi.values)


def envelope_sq(phi_fast, sigma):
    """``|Psi|^2 = lowpass(phi^2) / 2`` for a carrier oscillation ``phi``."""
    sq = phi_fast.with_values(np.abs(phi_fast.values) ** 2)
    return sq.with_values(0.5 * gaussian_lowpass(sq, sigma).values)


def _check_grids(a, b):
    if not a.same_grid(b):
        raise ValueError("time series are sampled on different grids")


def mode_transform(phi1, phi2):
    """In-phase and out-of-phase modes ``((phi1 + phi2)/2, (phi1 - phi2)/2)``."""
    _check_grids(phi1, phi2)
    return (phi1.with_values(0.5 * (phi1.values + phi2.values)),
            phi1.with_values(0.5 * (phi1.values - phi2.values)))


def inverse_mode_transform(phi_plus, phi_minus):
    """``(phi_plus + phi_minus, phi_plus - phi_minus)``."""
    _check_grids(phi_plus, phi_minus)
    return (phi_plus.with_values(phi_plus.values + phi_minus.values),
            phi_plus.with_values(phi_plus.values - phi_minus.values))


def populations(envelopes):
    """Normalize intensities pointwise so they sum to one."""
    envelopes = list(envelopes)
    if not envelopes:
        raise ValueError("need at least one envelope")
    for e in envelopes[1:]:
        _check_grids(envelopes[0], e)
    total = np.sum([e.values for e in envelopes], axis=0)
    if np.any(total <= 0):
        raise DegenerateSignalError("total intensity vanishes at some sample")
    return [e.with_values(e.values / total) for e in envelopes]


def spectrum(series, smoothing_sigma=0.0, threshold=0.05):
    """Fourier magnitude spectrum with Gaussian smoothing and peak list.

    Parameters
    ----------
    series : TimeSeries
        Real signal, at least 64 samples.  No window is applied.
    smoothing_sigma : float
        Gaussian width in Hz; 0 disables smoothing.
    threshold : float
        Peaks lower than this fraction of the largest smoothed value are
        dropped.

    Returns
    -------
    Spectrum
        ``magnitudes = |FFT| * dt`` on ``rfftfreq``.
    """
    n = len(series)
    if n < 64:
        raise ResolutionError("spectrum needs at least 64 samples")
    v = np.asarray(series.values, dtype=float)
    mag = np.abs(np.fft.rfft(v)) * series.dt
    freqs = np.fft.rfftfreq(n, series.dt)
    df = freqs[1] - freqs[0]
    if smoothing_sigma > 0:
        sm = ndimage.gaussian_filter1d(mag, smoothing_sigma / df, mode="reflect",
                                       truncate=TRUNCATE)
    else:
        sm = mag.copy()
    peaks, _ = sps.find_peaks(sm, height=threshold * sm.max())
    return Spectrum(freqs, mag, sm, float(smoothing_sigma), peaks)


def refine_peak(x, y, i):
    """Vertex of the parabola through samples ``i-1, i, i+1``."""
    if i <= 0 or i >= len(y) - 1:
        return float(x[i])
    a, b, c = y[i - 1], y[i], y[i + 1]
    den = a - 2 * b + c
    if den == 0:
        return float(x[i])
    off = 0.5 * (a - c) / den
    return float(x[i] + off * (x[1] - x[0]))


def husimi(series, sigma, omega_grid, t_grid):
    """Husimi map ``Q(t, omega) = |int dt' g(t - t') e^{i omega t'} Psi(t')|^2``.

    ``g`` is ``exp(-(t - t')^2 / (2 sigma^2))``; a signal ``exp(-i E t)``
    produces a ridge at ``omega = E``.

    Parameters
    ----------
    series : TimeSeries
        Real or complex samples of ``Psi``.
    sigma : float
        Packet width (s), at least three samples.
    omega_grid : array_like
        Angular frequencies (rad/s).
    t_grid : array_like
        Packet centres (s) inside the series span.
    """
    omega = np.asarray(omega_grid, dtype=float)
    tc = np.asarray(t_grid, dtype=float)
    if omega.ndim != 1 or tc.ndim != 1 or omega.size == 0 or tc.size == 0:
        raise ValueError("omega and t grids must be non-empty 1-D arrays")
    if sigma < 3 * series.dt:
        raise ResolutionError("packet width must span at least three samples")
    tol = 1e-9 * series.dt
    if tc.min() < series.t0 - tol or tc.max() > series.t_end + tol:
        raise ValueError("t grid extends beyond the series")
    v = np.asarray(series.values, dtype=complex)
    t = series.t
    half = int(math.ceil(TRUNCATE * sigma / series.dt))
    Q = np.empty((tc.size, omega.size))
    for i, tj in enumerate(tc):
        c = int(round((tj - series.t0) / series.dt))
        lo, hi = max(0, c - half), min(len(v), c + half + 1)
        tt = t[lo:hi]
        g = np.exp(-0.5 * ((tj - tt) / sigma) ** 2) * v[lo:hi]
        q = series.dt * (g @ np.exp(1j * np.outer(tt - tj, omega)))
        Q[i] = np.abs(q) ** 2
    return HusimiMap(tc, omega, Q, float(sigma))


def window_average(P, center, half_width):
    """Mean of the samples of `P` with ``|t - center| <= half_width``."""
    if half_width < 0:
        raise ValueError("half_width must be non-negative")
    tol = 1e-9 * P.dt
    if center - half_width < P.t0 - tol or center + half_width > P.t_end + tol:
        raise ValueError("averaging window extends beyond the series")
    t = P.t
    mask = np.abs(t - center) <= half_width + tol
    if not mask.any():
        raise ResolutionError("averaging window contains no samples")
    return float(np.mean(np.asarray(P.values)[mask]))


def reconstruct_deflection(psi, t, omega0, scale=1.0):
    """Real carrier signal ``phi = 2 scale Re(Psi exp(-i omega0 t))``.

    `psi` has shape ``(n,)`` or ``(n, k)`` for `n` times.
    """
    psi = np.asarray(psi)
    carrier = np.exp(-1j * omega0 * np.asarray(t, dtype=float))
    if psi.ndim == 2:
        carrier = carrier[:, None]
    return 2.0 * scale * np.real(psi * carrier)

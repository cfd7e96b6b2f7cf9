"""Power spectral density of scans against mirror position, on a 2/k_d axis."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import find_peaks
from scipy.signal.windows import hann

from ..traces import ScanTrace

MIN_SAMPLES = 16


class SpectrumError(ValueError):
    pass


@dataclass(frozen=True)
class PsdResult:
    """PSD of a scan; ``axis`` holds 2/k_d in nm for every nonzero FFT bin.

    ``k`` is the spatial frequency in cycles/nm, so an oscillation of period
    L in mirror position shows up at 2/k_d = 2L.
    """

    axis: np.ndarray
    power: np.ndarray
    k: np.ndarray
    window: str = "hann"
    zero_pad_factor: int = 4
    n_samples: int = 0
    step: float = 0.0


def psd_vs_inverse_k(trace: ScanTrace, window: str = "hann", zero_pad_factor: int = 4) -> PsdResult:
    x, y = trace.positions, trace.rates
    if len(x) > 1 and x[0] > x[-1]:
        x, y = x[::-1], y[::-1]  # scan direction must not matter
    if len(x) < MIN_SAMPLES:
        raise SpectrumError(f"need at least {MIN_SAMPLES} samples, got {len(x)}")
    steps = np.diff(x)
    if not np.allclose(steps, steps[0], rtol=1e-6, atol=0):
        raise SpectrumError("position grid must be uniform")
    if window not in ("hann", "none"):
        raise SpectrumError(f"unknown window {window!r}")
    if int(zero_pad_factor) < 1:
        raise SpectrumError("zero_pad_factor must be >= 1")
    step = abs(steps[0])
    n = len(y)
    w = hann(n, sym=False) if window == "hann" else np.ones(n)
    data = (y - y.mean()) * w
    nfft = int(zero_pad_factor) * n
    spec = np.abs(np.fft.rfft(data, nfft)) ** 2
    k = np.fft.rfftfreq(nfft, d=step)
    spec, k = spec[1:], k[1:]
    peak = spec.max()
    # a constant trace is exactly zero after mean subtraction up to rounding
    if peak > 0 and peak > 1e-20 * max(np.sum(y**2), 1e-300):
        spec = spec / peak
    else:
        spec = np.zeros_like(spec)
    return PsdResult(2.0 / k, spec, k, window, int(zero_pad_factor), n, step)


def psd_peaks(psd: PsdResult, count: int = 2, min_height: float = 0.05) -> list[float]:
    """Peak positions on the 2/k_d axis, strongest first, refined by parabolic interpolation in k."""
    p = psd.power
    idx, props = find_peaks(p, height=min_height)
    if idx.size == 0:
        return []
    order = idx[np.argsort(props["peak_heights"])[::-1]][:count]
    out = []
    dk = psd.k[1] - psd.k[0]
    for i in order:
        k = psd.k[i]
        if 0 < i < len(p) - 1:
            a, b, c = p[i - 1], p[i], p[i + 1]
            denom = a - 2 * b + c
            if denom != 0:
                k = k + 0.5 * (a - c) / denom * dk
        out.append(2.0 / k)
    return out


def power_near(psd: PsdResult, center_nm: float, rel_width: float = 0.08) -> float:
    """Largest PSD value within a relative window around 2/k_d = center_nm."""
    sel = np.abs(psd.axis - center_nm) <= rel_width * center_nm
    return float(psd.power[sel].max()) if np.any(sel) else 0.0

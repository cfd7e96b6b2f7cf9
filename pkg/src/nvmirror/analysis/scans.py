"""Background correction, signal-to-noise maps and enhancement extraction."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..traces import ScanTrace, TraceError

PUMP_TOLERANCE = 0.01


def _ascending(trace: ScanTrace):
    if trace.positions[0] <= trace.positions[-1]:
        return trace.positions, trace.rates, trace.stderr
    sl = slice(None, None, -1)
    err = trace.stderr[sl] if trace.stderr is not None else None
    return trace.positions[sl], trace.rates[sl], err


def _check_pump(a: ScanTrace, b: ScanTrace):
    if a.pump_power is None or b.pump_power is None:
        return
    ref = max(abs(a.pump_power), abs(b.pump_power))
    if ref > 0 and abs(a.pump_power - b.pump_power) > PUMP_TOLERANCE * ref:
        raise TraceError(
            f"pump power mismatch: {a.pump_power} uW vs {b.pump_power} uW (> {PUMP_TOLERANCE:.0%})"
        )


def _resample(background: ScanTrace, positions):
    bx, br, be = _ascending(background)
    if positions.max() < bx[0] or positions.min() > bx[-1]:
        raise TraceError("signal and background position ranges do not overlap")
    if np.array_equal(bx, positions):
        return br, be
    rates = np.interp(positions, bx, br)
    err = np.interp(positions, bx, be) if be is not None else None
    return rates, err


def subtract_background(signal: ScanTrace, background: ScanTrace) -> ScanTrace:
    """Pointwise signal minus background on the signal grid."""
    _check_pump(signal, background)
    rates_b, err_b = _resample(background, signal.positions)
    rates = signal.rates - rates_b
    if signal.stderr is not None and err_b is not None:
        err = np.hypot(signal.stderr, err_b)
    else:
        err = signal.stderr if signal.stderr is not None else err_b
    return signal.with_rates(rates, err, label=f"{signal.label} - background".strip())


def add_background(signal: ScanTrace, background: ScanTrace) -> ScanTrace:
    _check_pump(signal, background)
    rates_b, err_b = _resample(background, signal.positions)
    err = None
    if signal.stderr is not None and err_b is not None:
        err = np.hypot(signal.stderr, err_b)
    return signal.with_rates(signal.rates + rates_b, err)


@dataclass(frozen=True)
class SnrMap:
    powers: np.ndarray
    positions: np.ndarray
    snr: np.ndarray
    undefined: np.ndarray

    def max_per_power(self) -> np.ndarray:
        return np.nanmax(np.where(self.undefined, np.nan, self.snr), axis=1)


def snr_map(signal_map, background_map) -> SnrMap:
    """(signal - background) / background for every (power, position) cell.

    Cells with zero background are marked undefined and hold NaN.
    """
    signal_map, background_map = list(signal_map), list(background_map)
    if len(signal_map) != len(background_map) or not signal_map:
        raise TraceError("signal and background maps must hold the same, nonzero number of scans")
    positions = signal_map[0].positions
    rows, undef = [], []
    for sig, bg in zip(signal_map, background_map):
        _check_pump(sig, bg)
        if not np.array_equal(sig.positions, positions):
            raise TraceError("all signal scans must share one position grid")
        b, _ = _resample(bg, positions)
        zero = b == 0
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(zero, np.nan, (sig.rates - b) / np.where(zero, 1.0, b))
        rows.append(ratio)
        undef.append(zero)
    powers = np.array([s.pump_power if s.pump_power is not None else np.nan for s in signal_map])
    return SnrMap(powers, positions.copy(), np.array(rows), np.array(undef))


@dataclass(frozen=True)
class EnhancementResult:
    factor: float
    sigma: float | None
    peak_position: float


def extract_enhancement(trace: ScanTrace, baseline_rate: float, baseline_sigma: float | None = None
                        ) -> EnhancementResult:
    """Peak count rate over the mirror-free rate, with first-order error propagation.

    The peak position is reported relative to ``trace.meta['zero_position_nm']``
    when present, otherwise in the trace's own coordinates.
    """
    if baseline_rate <= 0:
        raise ValueError("baseline rate must be positive")
    i = int(np.argmax(trace.rates))
    peak = float(trace.rates[i])
    factor = peak / baseline_rate
    if factor <= 0:
        raise ValueError("trace has no positive count rate")
    sigma = None
    if trace.stderr is not None:
        rel2 = (trace.stderr[i] / peak) ** 2
        if baseline_sigma is not None:
            rel2 += (baseline_sigma / baseline_rate) ** 2
        sigma = factor * math.sqrt(rel2)
    zero = float(trace.meta.get("zero_position_nm", 0.0)) if trace.meta else 0.0
    return EnhancementResult(factor, sigma, float(trace.positions[i]) - zero)

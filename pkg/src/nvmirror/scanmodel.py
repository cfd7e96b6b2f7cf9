"""Forward model of count rate versus mirror position.

``D`` here is the mirror-substrate separation; the emitter sits ``d`` above the
substrate, so the emitter-mirror gap is ``D - d``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .analysis.fits import oscillation_model, saturation_model
from .emission import (
    DipoleOrientation,
    EmissionModel,
    EmitterGeometry,
    QuadratureSpec,
    collection,
    relative_decay_rate,
)
from .materials import SILICA, SILVER_532, SILVER_700, Material
from .optics import mirror
from .parallel import ordered_map
from .pump import pump_modulation
from .traces import ScanTrace


@dataclass(frozen=True)
class EmitterParams:
    P_sat: float
    R_inf: float
    tilt: float = math.pi / 2
    d: float = 25.0
    quantum_efficiency: float = 1.0


@dataclass(frozen=True)
class BackgroundModel:
    """Mirror fluorescence: mean rate linear in pump power, modulated by the pump standing wave."""

    rate_per_uW: float
    visibility: float = 0.3
    period: float = 266.0
    phase: float = 0.0

    def rates(self, D, pump_power):
        return oscillation_model(D, self.rate_per_uW * pump_power, self.visibility, self.period, self.phase)


@dataclass(frozen=True)
class NoiseModel:
    """Shot noise over ``repeats`` scans of ``integration_time`` s per point.

    ``excess`` is a relative Gaussian intensity fluctuation drawn per point and
    repeat (blinking, drift, focus jitter); it only acts when ``shot`` is on.
    """

    shot: bool = False
    integration_time: float = 1.0
    repeats: int = 1
    excess: float = 0.0
    background: BackgroundModel | None = None


@dataclass(frozen=True)
class ScanOptics:
    substrate: Material = SILICA
    mirror: Material = SILVER_700
    mirror_at_pump: Material = SILVER_532
    emission_wavelength: float = 700.0
    pump_wavelength: float = 532.0
    theta_max: float = math.radians(73.5)
    pump_visibility: float = 1.0
    mirror_influence: bool = True
    purcell_geometry: str = "mirror-only"
    rel_tol: float = 1e-7


def _mirror_point(args):
    gap, emitter, optics = args
    orient = DipoleOrientation(emitter.tilt)
    model = EmissionModel(optics.emission_wavelength, emitter.quantum_efficiency)
    quad = QuadratureSpec(rel_tol=optics.rel_tol)
    lower, upper = mirror(optics.substrate), mirror(optics.mirror)
    geom = EmitterGeometry(emitter.d, gap)
    coll = collection(geom, orient, model, lower, upper, optics.theta_max, quad)
    if optics.purcell_geometry == "full":
        gamma = coll.decay.gamma_rel
    else:
        gamma = relative_decay_rate(geom, orient, model, None, upper, quad).gamma_rel
    return gamma, coll.efficiency


def _reference(emitter, optics):
    orient = DipoleOrientation(emitter.tilt)
    model = EmissionModel(optics.emission_wavelength, emitter.quantum_efficiency)
    quad = QuadratureSpec(rel_tol=optics.rel_tol)
    geom = EmitterGeometry(emitter.d)
    coll = collection(geom, orient, model, mirror(optics.substrate), None, optics.theta_max, quad)
    lower = mirror(optics.substrate) if optics.purcell_geometry == "full" else None
    gamma = relative_decay_rate(geom, orient, model, lower, None, quad).gamma_rel
    return gamma, coll.efficiency


def mirror_factors(D_grid, emitter: EmitterParams, optics: ScanOptics = ScanOptics(), threads: int = 1):
    """Purcell and geometric factors (each relative to no mirror) on a mirror-substrate grid."""
    D = np.asarray(D_grid, dtype=float)
    gaps = D - emitter.d
    if np.any(gaps <= 0):
        raise ValueError("mirror-substrate separation must exceed the emitter height d")
    jobs = [(float(g), emitter, optics) for g in gaps]
    points = ordered_map(_mirror_point, jobs, threads)
    gamma0, eta0 = _reference(emitter, optics)
    gamma = np.array([p[0] for p in points]) / gamma0
    eta = np.array([p[1] for p in points]) / eta0
    return gamma, eta


def effective_pump(D_grid, pump_power, emitter: EmitterParams, optics: ScanOptics = ScanOptics()):
    m = pump_modulation(emitter.d, D_grid, optics.pump_wavelength, mirror(optics.mirror_at_pump),
                        mirror(optics.substrate))
    v = optics.pump_visibility
    return pump_power * ((1 - v) + v * m)


def clean_rates(D_grid, pump_power, emitter: EmitterParams, optics: ScanOptics = ScanOptics(),
                factors=None, threads: int = 1):
    """Noise-free emitter count rate (no background) on the grid."""
    D = np.asarray(D_grid, dtype=float)
    if not optics.mirror_influence:
        return saturation_model(np.full(D.shape, float(pump_power)), emitter.R_inf, emitter.P_sat)
    if factors is None:
        factors = mirror_factors(D, emitter, optics, threads)
    gamma, eta = factors
    p_eff = effective_pump(D, pump_power, emitter, optics)
    return saturation_model(p_eff, emitter.R_inf, emitter.P_sat) * gamma * eta


def background_trace(D_grid, pump_power, background: BackgroundModel, label="background") -> ScanTrace:
    D = np.asarray(D_grid, dtype=float)
    return ScanTrace(D, background.rates(D, pump_power), None, float(pump_power), label)


def shot_noise(rates, noise: NoiseModel, rng: np.random.Generator):
    """Averaged noisy rates and their standard error over ``noise.repeats`` scans."""
    T = noise.integration_time
    shape = (noise.repeats, len(rates))
    jitter = 1 + noise.excess * rng.standard_normal(shape)
    counts = rng.poisson(np.clip(rates * jitter, 0, None) * T) / T
    mean = counts.mean(axis=0)
    if noise.repeats > 1:
        err = counts.std(axis=0, ddof=1) / math.sqrt(noise.repeats)
    else:
        err = np.sqrt(np.clip(rates, 0, None) / T)
    return mean, err


def synth_scan(D_grid, pump_power: float, emitter: EmitterParams, noise: NoiseModel = NoiseModel(),
               optics: ScanOptics = ScanOptics(), rng: np.random.Generator | int | None = None,
               factors=None, threads: int = 1, label: str = "synthetic") -> ScanTrace:
    """Synthetic count-rate scan: emitter signal (+ background) with optional shot noise."""
    D = np.asarray(D_grid, dtype=float)
    if D.ndim != 1 or len(D) < 1 or np.any(np.diff(D) <= 0):
        raise ValueError("D_grid must be strictly increasing")
    rates = clean_rates(D, pump_power, emitter, optics, factors, threads)
    if noise.background is not None:
        rates = rates + noise.background.rates(D, pump_power)
    stderr = None
    if noise.shot:
        rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
        rates, stderr = shot_noise(rates, noise, rng)
    meta = {"integration_time_s": repr(float(noise.integration_time))} if noise.shot else {}
    return ScanTrace(D, rates, stderr, float(pump_power), label, meta)


def default_grid(start: float = 225.0, length: float = 4000.0, step: float = 20.0) -> np.ndarray:
    """Mirror-substrate separations covering ``length`` nm in experiment-sized steps."""
    n = int(round(length / step))
    return start + step * np.arange(n)

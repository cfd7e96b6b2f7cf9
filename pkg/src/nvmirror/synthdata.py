"""Synthetic regression datasets calibrated to the magnitudes of the NV-center measurements.

These are generated by the forward model, not measured. The generator config
(``data/fixtures/generator.json``) is committed next to the files it produces;
``generate`` rebuilds them byte for byte and ``calibrate`` re-tunes the few
free knobs (quantum efficiency, excess noise, emitter brightness) once.
"""

from __future__ import annotations

import json
import math
from dataclasses import replace
from importlib import resources
from pathlib import Path

import numpy as np
from scipy.optimize import brentq

from .analysis.fits import g2_model, saturation_model
from .analysis.scans import extract_enhancement, snr_map, subtract_background
from .scanmodel import (
    BackgroundModel,
    EmitterParams,
    NoiseModel,
    ScanOptics,
    clean_rates,
    default_grid,
    mirror_factors,
    shot_noise,
    synth_scan,
)
from .traces import G2Histogram, SaturationCurve, ScanTrace, write_g2, write_saturation, write_trace


def fixtures_dir() -> Path:
    return Path(str(resources.files("nvmirror.data").joinpath("fixtures")))


def load_generator(path: str | Path | None = None) -> dict:
    path = Path(path) if path else fixtures_dir() / "generator.json"
    return json.loads(path.read_text())


def _emitter(e: dict) -> EmitterParams:
    return EmitterParams(e["P_sat_uW"], e["R_inf_cps"], math.radians(e["tilt_deg"]), 25.0,
                         e["quantum_efficiency"])


def _grid(cfg) -> np.ndarray:
    g = cfg["grid"]
    return default_grid(g["start"], g["length"], g["step"])


def _optics(cfg) -> ScanOptics:
    return ScanOptics(pump_visibility=cfg["pump_visibility"])


def _background(cfg) -> BackgroundModel:
    b = cfg["background"]
    return BackgroundModel(b["rate_per_uW"], b["visibility"], b["period_nm"], b["phase_rad"])


def _rng(cfg, *tags) -> np.random.Generator:
    # one independent stream per dataset, so editing one leaves the others untouched
    return np.random.default_rng([cfg["seed"], *tags])


class _Factors:
    """Mirror factors cached per tilt; they do not depend on power or noise.

    With the mirror-only Purcell reference (Gamma_0 = 1), a quantum efficiency
    q maps the q = 1 ratio g onto 1 - q + q*g, so one sweep serves every q.
    """

    def __init__(self, cfg, threads):
        self.cfg, self.threads, self.cache = cfg, threads, {}
        if _optics(cfg).purcell_geometry != "mirror-only":
            raise ValueError("fixture generation assumes the mirror-only Purcell reference")

    def __call__(self, emitter: EmitterParams):
        if emitter.tilt not in self.cache:
            unit = replace(emitter, quantum_efficiency=1.0)
            self.cache[emitter.tilt] = mirror_factors(_grid(self.cfg), unit, _optics(self.cfg), self.threads)
        gamma, eta = self.cache[emitter.tilt]
        q = emitter.quantum_efficiency
        return 1 - q + q * gamma, eta


# ---------------------------------------------------------------- datasets


def saturation_curve(cfg, i: int) -> SaturationCurve:
    e = cfg["emitters"][i]
    s = cfg["saturation"]
    P = np.array(s["powers_uW"], dtype=float)
    R = saturation_model(P, e["R_inf_cps"], e["P_sat_uW"])
    noisy = R * (1 + s["relative_noise"] * _rng(cfg, 1, i).standard_normal(P.size))
    return SaturationCurve(P, noisy, s["relative_noise"] * R, e["label"])


def g2_histogram(cfg, i: int) -> G2Histogram:
    e, g = cfg["emitters"][i], cfg["g2"]
    tau = np.arange(-g["tau_max_ns"], g["tau_max_ns"] + g["bin_ns"] / 2, g["bin_ns"])
    y = g2_model(tau, e["g2_0"], g["a"], g["tau1_ns"], g["tau2_ns"])
    y = y + g["noise"] * _rng(cfg, 2, i).standard_normal(tau.size)
    return G2Histogram(tau, y, "normalized")


def background_scan(cfg) -> ScanTrace:
    b = cfg["background"]
    D = _grid(cfg)
    rates = _background(cfg).rates(D, b["power_uW"])
    noisy = rates * (1 + b["relative_noise"] * _rng(cfg, 3).standard_normal(D.size))
    return ScanTrace(D, noisy, b["relative_noise"] * rates, float(b["power_uW"]), "mirror background")


def enhancement_scans(cfg, i: int, factors, emitter=None, excess=None):
    """(signal, background, baseline rate, baseline sigma) at high pump power for emitter ``i``."""
    e, s = cfg["emitters"][i], cfg["enhancement_scan"]
    emitter = emitter or _emitter(e)
    excess = e["excess"] if excess is None else excess
    P = s["power_factor"] * e["P_sat_uW"]
    D = _grid(cfg)
    rng = _rng(cfg, 4, i)
    noise = NoiseModel(True, s["integration_time_s"], s["repeats"], excess, _background(cfg))
    sig = synth_scan(D, P, emitter, noise, _optics(cfg), rng, factors(emitter), label=e["label"])
    b, b_err = shot_noise(_background(cfg).rates(D, P), replace(noise, excess=0.0), rng)
    bg = ScanTrace(D, b, b_err, float(P), f"{e['label']} background")
    base = saturation_model(P, emitter.R_inf, emitter.P_sat)
    draws = base * (1 + excess * rng.standard_normal(s["repeats"]))
    baseline, baseline_sigma = float(draws.mean()), float(draws.std(ddof=1) / math.sqrt(s["repeats"]))
    clean = clean_rates(D, P, emitter, _optics(cfg), factors(emitter))
    zero = float(D[np.argmax(clean)])
    meta = {"baseline_rate_cps": repr(baseline), "baseline_sigma_cps": repr(baseline_sigma),
            "zero_position_nm": repr(zero), "P_over_P_sat": repr(float(s["power_factor"]))}
    sig = replace(sig, meta={**sig.meta, **meta})
    return sig, bg, baseline, baseline_sigma


def psd_scan(cfg, which: str, factors) -> ScanTrace:
    p = cfg["psd"]
    i = p["emitter"]
    e = cfg["emitters"][i]
    emitter = _emitter(e)
    P = p[f"{which}_power_factor"] * e["P_sat_uW"]
    noise = NoiseModel(True, p["integration_time_s"], p["repeats"], p["excess"])
    tag = 5 if which == "high" else 6
    return synth_scan(_grid(cfg), P, emitter, noise, _optics(cfg), _rng(cfg, tag),
                      factors(emitter), label=f"{e['label']} {which} power, background corrected")


def snr_scans(cfg, factors, R_inf=None):
    m = cfg["snr_map"]
    e = cfg["emitters"][m["emitter"]]
    emitter = _emitter(e)
    if R_inf is not None:
        emitter = replace(emitter, R_inf=R_inf)
    D = _grid(cfg)
    bgm = _background(cfg)
    sigs, bgs = [], []
    for j, P in enumerate(m["powers_uW"]):
        rng = _rng(cfg, 7, j)
        noise = NoiseModel(True, m["integration_time_s"], m["repeats"], m["excess"], bgm)
        sigs.append(synth_scan(D, P, emitter, noise, _optics(cfg), rng, factors(emitter),
                               label=f"signal {P:g} uW"))
        b, b_err = shot_noise(bgm.rates(D, P), replace(noise, excess=0.0), rng)
        bgs.append(ScanTrace(D, b, b_err, float(P), f"background {P:g} uW"))
    return sigs, bgs


# ---------------------------------------------------------------- calibration


def calibrate(cfg: dict, threads: int = 1) -> dict:
    """Tune quantum efficiency and excess noise per emitter, and brightness for the SNR map."""
    cfg = json.loads(json.dumps(cfg))
    factors = _Factors(cfg, threads)
    for i, e in enumerate(cfg["emitters"]):
        def extracted(q, ex):
            em = replace(_emitter(e), quantum_efficiency=q)
            sig, bg, base, bsig = enhancement_scans(cfg, i, factors, em, ex)
            return extract_enhancement(subtract_background(sig, bg), base, bsig)

        ex, q = e["excess"], e["quantum_efficiency"]
        for _ in range(8):
            q = brentq(lambda q: extracted(q, ex).factor - e["target_enhancement"], 0.05, 1.0, xtol=1e-7)
            got = extracted(q, ex)
            if abs(got.sigma / e["target_sigma"] - 1) < 0.01:
                break
            ex *= e["target_sigma"] / got.sigma
        e["quantum_efficiency"] = round(q, 7)
        e["excess"] = round(ex, 7)

    # brightness for the SNR map: match the low-power maximum of the noisy map
    m = cfg["snr_map"]
    for _ in range(6):
        sigs, bgs = snr_scans(cfg, factors, m["R_inf_cps"])
        low = snr_map(sigs[:1], bgs[:1]).max_per_power()[0]
        if abs(low / m["target_low_power_snr"] - 1) < 0.002:
            break
        m["R_inf_cps"] = round(m["R_inf_cps"] * m["target_low_power_snr"] / low, 1)
    return cfg


# ---------------------------------------------------------------- files


def generate(cfg: dict, out: str | Path, threads: int = 1) -> list[Path]:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    factors = _Factors(cfg, threads)
    written = []

    def put(name):
        written.append(out / name)
        return out / name

    for i, e in enumerate(cfg["emitters"]):
        write_saturation(saturation_curve(cfg, i), put(f"saturation_{e['label']}.csv"))
        write_g2(g2_histogram(cfg, i), put(f"g2_{e['label']}.csv"))
        sig, bg, _, _ = enhancement_scans(cfg, i, factors)
        write_trace(sig, put(f"enhancement_{e['label']}.csv"))
        write_trace(bg, put(f"enhancement_{e['label']}_background.csv"))
    write_trace(background_scan(cfg), put("background_scan.csv"))
    for which in ("high", "low"):
        write_trace(psd_scan(cfg, which, factors), put(f"psd_{which}_power.csv"))
    m = cfg["snr_map"]
    em = cfg["emitters"][m["emitter"]]
    sigs, bgs = snr_scans(cfg, factors, m["R_inf_cps"])
    for P, s, b in zip(m["powers_uW"], sigs, bgs):
        write_trace(s, put(f"snr_signal_{P:g}uW.csv"), {"emitter": em["label"]})
        write_trace(b, put(f"snr_background_{P:g}uW.csv"))
    return written


def snr_files(directory: str | Path | None = None, cfg: dict | None = None):
    directory = Path(directory) if directory else fixtures_dir()
    cfg = cfg or load_generator(directory / "generator.json")
    powers = cfg["snr_map"]["powers_uW"]
    return ([directory / f"snr_signal_{P:g}uW.csv" for P in powers],
            [directory / f"snr_background_{P:g}uW.csv" for P in powers])


def snr_summary(signal_map, background_map):
    m = snr_map(signal_map, background_map)
    return m.powers, m.max_per_power()

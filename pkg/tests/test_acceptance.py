"""Acceptance criteria, one printed PASS/FAIL line each.

Values are computed here through the public API, independently of the
``reproduce`` module (which criterion 10 exercises end to end). Tolerances are
the published ones and are not tuned to the results.
"""

import math
import time
import warnings

import numpy as np
import pytest
from scipy.integrate import trapezoid
from scipy.signal import find_peaks

from nvmirror import (
    HORIZONTAL,
    SILICA,
    SILVER_532,
    SILVER_700,
    VERTICAL,
    DipoleOrientation,
    EmissionModel,
    EmitterGeometry,
    Material,
    PlaneWaveQuery,
    QuadratureSpec,
    collection,
    far_field_pattern,
    interface_coefficients,
    mirror,
    pump_modulation,
    read_g2,
    read_saturation,
    read_trace,
    relative_decay_rate,
    total_enhancement,
)
from nvmirror import reproduce
from nvmirror.analysis import (
    extract_enhancement,
    fit_background_oscillation,
    fit_g2,
    fit_saturation,
    psd_peaks,
    psd_vs_inverse_k,
    saturation_model,
    snr_map,
    subtract_background,
)
from nvmirror.analysis.spectra import power_near
from nvmirror.optics import flux_factor
from nvmirror.synthdata import fixtures_dir, load_generator, snr_files
from nvmirror.traces import ScanTrace

LAM = 700.0
d = 25.0
THETA = math.radians(73.5)
MODEL = EmissionModel(LAM)
SUB, MIR = mirror(SILICA), mirror(SILVER_700)
ORIENTS = {"horizontal": HORIZONTAL, "vertical": VERTICAL}
FX = fixtures_dir()


def _verdict(report, n, ok, detail):
    report(f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}")
    assert ok, detail


def _mirror_gamma(D, orient=HORIZONTAL):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return relative_decay_rate(EmitterGeometry(d, D), orient, MODEL, None, MIR,
                                   QuadratureSpec(rel_tol=1e-7)).gamma_rel


def test_criterion_1_collection_efficiency(report):
    targets = {("horizontal", None): 0.79, ("vertical", None): 0.83,
               ("horizontal", 200.0): 0.99, ("vertical", 200.0): 0.96}
    parts, ok = [], True
    for (name, D), target in targets.items():
        t0 = time.perf_counter()
        eta = collection(EmitterGeometry(d, D), ORIENTS[name], MODEL, SUB, MIR if D else None, THETA).efficiency
        dt = time.perf_counter() - t0
        good = abs(eta - target) <= 0.02 and dt < 5.0
        ok &= good
        parts.append(f"{name} D={D}: {eta:.4f} vs {target}+/-0.02 in {dt:.2f}s{'' if good else ' (out)'}")
    _verdict(report, 1, ok, "; ".join(parts))


def test_criterion_2_geometric_factor(report):
    vals = {}
    for name, o in ORIENTS.items():
        with_m = collection(EmitterGeometry(d, 200.0), o, MODEL, SUB, MIR, THETA).efficiency
        without = collection(EmitterGeometry(d), o, MODEL, SUB, None, THETA).efficiency
        vals[name] = with_m / without
    ok = all(1.13 <= g <= 1.28 for g in vals.values())
    _verdict(report, 2, ok, ", ".join(f"{k} {v:.4f}" for k, v in vals.items()) + " in [1.13, 1.28]")


def test_criterion_3_purcell_anchor(report):
    D = np.arange(100.0, 351.0, 5.0)
    g = np.array([_mirror_gamma(x) for x in D])
    i = int(np.argmax(g))
    ok = abs(g[i] - 1.4) <= 0.1 and abs(D[i] - 200) <= 50
    _verdict(report, 3, ok, f"max Gamma/Gamma0 = {g[i]:.4f} (1.4+/-0.1) at D = {D[i]:g} nm (200+/-50)")


def test_criterion_4_total_enhancement(report):
    e = {name: total_enhancement(EmitterGeometry(d, 200.0), o, MODEL, SUB, MIR, THETA).total
         for name, o in ORIENTS.items()}
    ok = abs(e["horizontal"] - 1.75) <= 0.05 and abs(e["vertical"] - 1.62) <= 0.05
    _verdict(report, 4, ok, f"horizontal {e['horizontal']:.4f} (1.75+/-0.05), vertical {e['vertical']:.4f} (1.62+/-0.05)")


def _hemisphere_total(geom, orient, lower, upper):
    # dense sampled far field in both media; the substrate side needs the supercritical range too
    theta = np.linspace(0, math.pi / 2, 40001, endpoint=False)
    tot = 0.0
    for hemi in ("lower", "upper"):
        p = far_field_pattern(geom, orient, MODEL, lower, upper, hemi, theta)
        w = np.append(p.weight, 0.0 if p.terminal_index > 1 else p.weight[-1])
        tot += float(trapezoid(w, np.append(theta, math.pi / 2)))
    return tot


def test_criterion_5_property_suite(report):
    t0 = time.perf_counter()
    errs = {}
    errs["free space"] = max(abs(relative_decay_rate(EmitterGeometry(d), o, MODEL).gamma_rel - 1)
                             for o in ORIENTS.values())
    pec = mirror(Material("pec", 1e6j))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        near = EmitterGeometry(d, 0.01)
        v = relative_decay_rate(near, VERTICAL, MODEL, None, pec).gamma_rel
        h = relative_decay_rate(near, HORIZONTAL, MODEL, None, pec).gamma_rel
    errs["PEC contact"] = max(abs(v - 2), abs(h))
    errs["energy"] = 0.0
    for o in ORIENTS.values():
        gamma = relative_decay_rate(EmitterGeometry(d), o, MODEL, SUB).gamma_rel
        far = _hemisphere_total(EmitterGeometry(d), o, SUB, None)
        errs["energy"] = max(errs["energy"], abs(far - gamma) / gamma)
    errs["asymptote"] = 0.0
    for o in ORIENTS.values():
        far = relative_decay_rate(EmitterGeometry(d, 20 * LAM), o, MODEL, SUB, MIR).gamma_rel
        inf = relative_decay_rate(EmitterGeometry(d), o, MODEL, SUB).gamma_rel
        errs["asymptote"] = max(errs["asymptote"], abs(far - inf) / inf)
    errs["tilt"] = 0.0
    for tilt in np.linspace(0.1, 1.4, 6):
        r = relative_decay_rate(EmitterGeometry(d, 200.0), DipoleOrientation(tilt), MODEL, SUB, MIR)
        mix = math.cos(tilt) ** 2 * r.gamma_perp + math.sin(tilt) ** 2 * r.gamma_par
        errs["tilt"] = max(errs["tilt"], abs(r.gamma_rel - mix) / r.gamma_rel)
    s = np.linspace(0, 0.99, 100)
    errs["Fresnel energy"] = 0.0
    for pol in ("s", "p"):
        r, t = interface_coefficients(PlaneWaveQuery(pol, s, LAM, SILICA), 1.46, 1.0)
        bal = np.abs(r) ** 2 + flux_factor(pol, 1.46, 1.0, s, 1.46) * np.abs(t) ** 2
        errs["Fresnel energy"] = max(errs["Fresnel energy"], float(np.max(np.abs(bal - 1))))
    rs, _ = interface_coefficients(PlaneWaveQuery("s", s, LAM, SILICA), 1.46, 1e7j)
    rp, _ = interface_coefficients(PlaneWaveQuery("p", s, LAM, SILICA), 1.46, 1e7j)
    errs["Fresnel PEC"] = float(max(np.max(np.abs(rs + 1)), np.max(np.abs(rp - 1))))
    dt = time.perf_counter() - t0
    limits = {"free space": 1e-6, "PEC contact": 1e-3, "energy": 1e-3, "asymptote": 1e-3, "tilt": 1e-6,
              "Fresnel energy": 1e-12, "Fresnel PEC": 1e-5}
    bad = [k for k in limits if not errs[k] < limits[k]]
    ok = not bad and dt < 60
    detail = ", ".join(f"{k} {errs[k]:.2g}<{limits[k]:g}" for k in limits) + f"; {dt:.1f}s<60s"
    _verdict(report, 5, ok, detail + (f"; failing: {', '.join(bad)}" if bad else ""))


def test_criterion_6_decay_oscillation_period(report):
    D = np.arange(480.0, 3021.0, 5.0)
    g = np.array([_mirror_gamma(x) for x in D])
    idx, _ = find_peaks(g)
    # parabolic refinement of each maximum
    a, b, c = g[idx - 1], g[idx], g[idx + 1]
    peaks = D[idx] + 0.5 * (a - c) / (a - 2 * b + c) * 5.0
    peaks = peaks[(peaks >= 500) & (peaks <= 3000)]
    spacing = np.diff(peaks)
    ok = spacing.size >= 3 and bool(np.all(np.abs(spacing - 350) <= 20))
    _verdict(report, 6, ok, f"spacings {np.round(spacing, 1).tolist()} nm, each 350+/-20")


def test_criterion_7_pump_period(report):
    D = np.arange(100.0, 4000.0, 0.25)
    m = pump_modulation(d, D, 532.0, mirror(SILVER_532), SUB)
    idx, _ = find_peaks(m)
    period = (D[idx[-1]] - D[idx[0]]) / (len(idx) - 1)
    _verdict(report, 7, abs(period - 266) <= 2, f"period {period:.2f} nm (266+/-2)")


def test_criterion_8_fit_recovery(report):
    cfg = load_generator(FX / "generator.json")
    parts, ok, slowest = [], True, 0.0
    P = np.array(cfg["saturation"]["powers_uW"], dtype=float)
    for e in cfg["emitters"]:
        t0 = time.perf_counter()
        clean = fit_saturation(P, saturation_model(P, e["R_inf_cps"], e["P_sat_uW"])).P_sat
        slowest = max(slowest, time.perf_counter() - t0)
        curve = read_saturation(FX / f"saturation_{e['label']}.csv")
        t0 = time.perf_counter()
        noisy = fit_saturation(curve.powers, curve.rates, sigma=curve.stderr).P_sat
        slowest = max(slowest, time.perf_counter() - t0)
        e0, e1 = abs(clean / e["P_sat_uW"] - 1), abs(noisy / e["P_sat_uW"] - 1)
        ok &= e0 <= 0.005 and e1 <= 0.05
        parts.append(f"P_sat {e['P_sat_uW']}: {e0:.1e}/{e1:.3f}")
    t0 = time.perf_counter()
    g2 = fit_g2(read_g2(FX / "g2_NVb.csv")).g2_0
    slowest = max(slowest, time.perf_counter() - t0)
    t0 = time.perf_counter()
    period = fit_background_oscillation(read_trace(FX / "background_scan.csv")).period
    slowest = max(slowest, time.perf_counter() - t0)
    ok &= abs(g2 - 0.16) <= 0.02 and period is not None and abs(period - 266) <= 2 and slowest < 1.0
    parts += [f"g2(0) {g2:.3f} (0.16+/-0.02)", f"Lambda {period:.2f} nm (266+/-2)", f"slowest fit {slowest:.3f}s<1s"]
    _verdict(report, 8, ok, "saturation noiseless/noisy rel. error (<=0.005/<=0.05) " + "; ".join(parts))


def test_criterion_9_psd(report):
    D = 225.0 + 20.0 * np.arange(200)
    two = ScanTrace(D, np.cos(2 * np.pi * D / 266.0) + np.cos(2 * np.pi * D / 350.0))
    peaks = psd_peaks(psd_vs_inverse_k(two), 2)
    p532 = min(peaks, key=lambda p: abs(p - 532))
    p700 = min(peaks, key=lambda p: abs(p - 700))
    high = psd_vs_inverse_k(read_trace(FX / "psd_high_power.csv"))
    low = psd_vs_inverse_k(read_trace(FX / "psd_low_power.csv"))
    h700, h532 = power_near(high, 700), power_near(high, 532)
    l532 = power_near(low, 532)
    ok = (abs(p532 - 532) <= 10 and abs(p700 - 700) <= 15 and h700 > h532
          and l532 >= 0.05 and any(abs(p - 532) <= 10 for p in psd_peaks(low, 3)))
    _verdict(report, 9, ok, f"peaks {p532:.1f} (532+/-10), {p700:.1f} (700+/-15); high power 700/532 = "
                            f"{h700 / h532:.2f} (>1); low power 532 nm level {l532:.2f} (>=0.05)")


def test_criterion_10_end_to_end(report, tmp_path):
    cfg = load_generator(FX / "generator.json")
    ext = []
    for e in cfg["emitters"]:
        sig = read_trace(FX / f"enhancement_{e['label']}.csv")
        net = subtract_background(sig, read_trace(FX / f"enhancement_{e['label']}_background.csv"))
        res = extract_enhancement(net, float(sig.meta["baseline_rate_cps"]), float(sig.meta["baseline_sigma_cps"]))
        ext.append((e["label"], res.factor, e["target_enhancement"], e["target_sigma"]))
    sig_files, bg_files = snr_files(FX, cfg)
    best = snr_map([read_trace(f) for f in sig_files], [read_trace(f) for f in bg_files]).max_per_power()
    t0 = time.perf_counter()
    checks = reproduce.run(tmp_path, threads=1)
    dt = time.perf_counter() - t0
    failed = [f"[{c.criterion}] {c.name}" for c in checks if not c.passed]
    ok_ext = all(abs(f - t) <= s for _, f, t, s in ext)
    ok = ok_ext and not failed and dt < 120
    detail = ", ".join(f"{lab} {f:.3f} ({t}+/-{s})" for lab, f, t, s in ext)
    detail += f"; SNR {best[0]:.1f}/{best[-1]:.1f}; reproduce-paper {len(checks) - len(failed)}/{len(checks)} in {dt:.0f}s"
    if failed:
        detail += "; failing: " + "; ".join(failed)
    _verdict(report, 10, ok, detail)

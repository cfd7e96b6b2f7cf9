"""Command-line front end.

Exit codes: 0 success, 2 invalid input or config, 3 numerical non-convergence.
"""

from __future__ import annotations

import argparse
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from . import reproduce
from .analysis import (
    ConvergenceError,
    FitError,
    extract_enhancement,
    fit_g2,
    fit_saturation,
    g2_model,
    psd_peaks,
    psd_vs_inverse_k,
    saturation_model,
    snr_map,
    subtract_background,
)
from .analysis.spectra import SpectrumError
from .config import ConfigError, RunConfig, load_config
from .emission import (
    EmissionError,
    collection,
    far_field_pattern,
    relative_decay_rate,
    total_enhancement,
)
from .io import write_csv, write_json
from .materials import MaterialError
from .optics import StackError, mirror
from .parallel import ordered_map
from .pump import pump_modulation
from .quadrature import QuadratureError
from .scanmodel import default_grid, synth_scan
from .traces import TraceError, file_digest, read_g2, read_saturation, read_trace, write_trace

EXIT_OK, EXIT_INVALID, EXIT_NONCONVERGED = 0, 2, 3


class _Run:
    """Per-invocation context: config, output directory, flags."""

    def __init__(self, args):
        self.args = args
        overrides = list(args.set or [])
        self.cfg: RunConfig = load_config(args.config, overrides)
        self.out = Path(args.out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.threads = max(1, args.threads)
        self.svg = args.format == "csv+svg"

    def csv(self, name, header, rows):
        path = write_csv(self.out / name, header, rows)
        print(f"wrote {path}")
        return path

    def json(self, name, record):
        path = write_json(self.out / name, record)
        print(f"wrote {path}")
        return path

    def plot(self, name, series, xlabel, ylabel, **kw):
        if self.svg:
            from .plotting import line_plot

            line_plot(self.out / name, list(series), xlabel, ylabel, **kw)
            print(f"wrote {self.out / name}")

    def input(self, flag_value, key):
        value = flag_value or self.cfg.get(f"inputs.{key}")
        if not value:
            raise ConfigError(f"inputs.{key}: no input file given (flag or config)")
        return self.cfg.path(value) if not flag_value else Path(value)


def _provenance(*paths):
    return {"inputs": [{"file": str(p), "digest": file_digest(p)} for p in paths]}


# ---------------------------------------------------------------- emission commands


def _decay_job(args):
    cfg, D, tilt_label = args
    orient = dict(cfg.orientations())[tilt_label]
    lower = cfg.lower_stack() if cfg.get("geometry.substrate_in_decay", False) else None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        r = relative_decay_rate(cfg.geometry(D), orient, cfg.model(), lower, cfg.upper_stack(), cfg.quadrature())
    return r


def cmd_decay_sweep(run: _Run):
    cfg = run.cfg
    D = cfg.D_sweep()
    labels = [name for name, _ in cfg.orientations()]
    results = ordered_map(_decay_job, [(cfg, float(d), lab) for lab in labels for d in D], run.threads)
    rows, series = [], []
    for k, lab in enumerate(labels):
        part = results[k * len(D):(k + 1) * len(D)]
        tilt = math.degrees(dict(cfg.orientations())[lab].tilt)
        for d, r in zip(D, part):
            rows.append((d, lab, tilt, r.gamma_rel, r.gamma_rad_lower, r.gamma_rad_upper, r.gamma_nonrad,
                         r.quadrature_error, r.truncation_warning))
        g = np.array([r.gamma_rel for r in part])
        i = int(np.argmax(g))
        print(f"{lab}: max Gamma/Gamma0 = {g[i]:.4f} at D = {D[i]:g} nm")
        series.append((lab, D, g))
    run.csv("decay_sweep.csv", ["D_nm", "orientation", "tilt_deg", "gamma_rel", "gamma_rad_lower",
                                "gamma_rad_upper", "gamma_nonrad", "quadrature_error", "truncation_warning"], rows)
    run.plot("decay_sweep.svg", series, "emitter-mirror distance D (nm)", "Gamma / Gamma0")


def cmd_pattern(run: _Run):
    cfg = run.cfg
    theta = np.linspace(0, math.pi / 2, int(cfg.get("pattern.n_theta", 901)), endpoint=False)
    rows, series = [], []
    for D in cfg.D_values():
        for lab, orient in cfg.orientations():
            for hemi in ("lower", "upper"):
                p = far_field_pattern(cfg.geometry(D), orient, cfg.model(), cfg.lower_stack(),
                                      cfg.upper_stack() if D is not None else None, hemi, theta)
                rows += [(D, lab, hemi, math.degrees(t), v) for t, v in zip(theta, p.dp_domega)]
                if hemi == "lower":
                    series.append((f"{lab}, D={'inf' if D is None else f'{D:g}'}", np.degrees(theta), p.dp_domega))
    run.csv("pattern.csv", ["D_nm", "orientation", "hemisphere", "theta_deg", "dp_domega"], rows)
    run.plot("pattern.svg", series, "exit angle in the substrate (deg)", "dP/dOmega (Gamma0 / sr)")


def cmd_collection(run: _Run):
    cfg = run.cfg
    rows, eff = [], {}
    for D in cfg.D_values():
        for lab, orient in cfg.orientations():
            res = collection(cfg.geometry(D), orient, cfg.model(), cfg.lower_stack(),
                             cfg.upper_stack() if D is not None else None, cfg.theta_max, cfg.quadrature())
            eff[lab, D] = res.efficiency
            rows.append((D, lab, math.degrees(orient.tilt), res.efficiency, res.collected, res.decay.gamma_rad,
                         res.decay.gamma_rel))
            print(f"{lab}, D = {'inf' if D is None else f'{D:g} nm'}: eta = {res.efficiency:.4f}")
    run.csv("collection.csv", ["D_nm", "orientation", "tilt_deg", "efficiency", "collected", "gamma_rad",
                               "gamma_rel"], rows)
    if None in cfg.D_values():
        geo = [(D, lab, eff[lab, D] / eff[lab, None]) for D in cfg.D_values() if D is not None
               for lab, _ in cfg.orientations()]
        for D, lab, g in geo:
            print(f"{lab}, D = {D:g} nm: geometric factor = {g:.4f}")
        run.csv("geometric_factor.csv", ["D_nm", "orientation", "geometric_factor"], geo)


def _enh_job(args):
    cfg, D, lab = args
    orient = dict(cfg.orientations())[lab]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return total_enhancement(cfg.geometry(D), orient, cfg.model(), cfg.lower_stack(), cfg.upper_stack(),
                                 cfg.theta_max, cfg.quadrature(), purcell_geometry=cfg.purcell_geometry)


def cmd_enhancement_sweep(run: _Run):
    cfg = run.cfg
    D = cfg.D_sweep()
    labels = [name for name, _ in cfg.orientations()]
    res = ordered_map(_enh_job, [(cfg, float(d), lab) for lab in labels for d in D], run.threads)
    rows, series = [], []
    for k, lab in enumerate(labels):
        part = res[k * len(D):(k + 1) * len(D)]
        rows += [(d, lab, e.purcell, e.geometric, e.total) for d, e in zip(D, part)]
        tot = np.array([e.total for e in part])
        i = int(np.argmax(tot))
        print(f"{lab}: max total enhancement = {tot[i]:.4f} at D = {D[i]:g} nm")
        series.append((lab, D, tot))
    run.csv("enhancement_sweep.csv", ["D_nm", "orientation", "purcell", "geometric", "total"], rows)
    run.plot("enhancement_sweep.svg", series, "emitter-mirror distance D (nm)", "total enhancement")


def cmd_pump_wave(run: _Run):
    cfg = run.cfg
    D = cfg.D_sweep()
    z = float(cfg.get("pump.emitter_height_nm", cfg.d))
    sub = cfg.substrate
    m = pump_modulation(z, D, float(cfg.get("pump.wavelength_nm", 532.0)),
                        mirror(cfg._material("mirror_at_pump", "silver_532"), cfg.emitter_medium),
                        mirror(sub, cfg.emitter_medium) if sub is not None else None)
    run.csv("pump_wave.csv", ["D_nm", "relative_intensity"], zip(D, m))
    run.plot("pump_wave.svg", [("", D, m)], "mirror-substrate separation (nm)", "relative pump intensity")


def cmd_synth_scan(run: _Run):
    cfg = run.cfg
    if cfg.get("geometry.D_sweep") is None:
        D = default_grid()
    else:
        D = cfg.D_sweep()
    noise = cfg.noise()
    trace = synth_scan(D, cfg.pump_power, cfg.emitter(), noise, cfg.scan_optics(), np.random.default_rng(run.args.seed),
                       threads=run.threads, label="synthetic")
    extra = {"seed": str(run.args.seed)} if noise.shot else {}
    path = run.out / "synth_scan.csv"
    write_trace(trace, path, extra)
    print(f"wrote {path}")
    if noise.background is not None:
        b = noise.background.rates(D, cfg.pump_power)
        run.csv("synth_background_model.csv", ["position_nm", "rate_cps"], zip(D, b))
    run.plot("synth_scan.svg", [("", D, trace.rates)], "mirror-substrate separation (nm)", "count rate (1/s)")


# ---------------------------------------------------------------- analysis commands


def cmd_fit_saturation(run: _Run):
    path = run.input(run.args.input, "saturation")
    curve = read_saturation(path)
    linear = bool(run.cfg.get("inputs.with_linear_term", False))
    fit = fit_saturation(curve.powers, curve.rates, linear, curve.stderr)
    print(f"P_sat = {fit.P_sat:.2f} +/- {fit.sigma_P_sat:.2f} uW, R_inf = {fit.R_inf:.1f} +/- {fit.sigma_R_inf:.1f} cps")
    run.json("fit_saturation.json", {**fit.to_dict(), "provenance": _provenance(path)})
    model = saturation_model(curve.powers, fit.R_inf, fit.P_sat, fit.slope or 0.0)
    run.csv("fit_saturation.csv", ["pump_power_uW", "rate_cps", "model_cps"], zip(curve.powers, curve.rates, model))
    run.plot("fit_saturation.svg", [("data", curve.powers, curve.rates), ("fit", curve.powers, model)],
             "pump power (uW)", "count rate (1/s)")


def cmd_fit_g2(run: _Run):
    path = run.input(run.args.input, "g2")
    hist = read_g2(path)
    fit = fit_g2(hist)
    print(f"g2(0) = {fit.g2_0:.3f} +/- {fit.sigma_g2_0:.3f}; single emitter: {fit.single_emitter}")
    run.json("fit_g2.json", {**fit.to_dict(), "provenance": _provenance(path)})
    model = g2_model(hist.tau, fit.g2_0, fit.a, fit.tau1, fit.tau2)
    run.csv("fit_g2.csv", ["tau_ns", "value", "model"], zip(hist.tau, hist.values, model))
    run.plot("fit_g2.svg", [("data", hist.tau, hist.values), ("fit", hist.tau, model)], "delay (ns)", "g2")


def cmd_psd(run: _Run):
    path = run.input(run.args.input, "trace")
    trace = read_trace(path)
    inputs = [path]
    bg_path = run.args.background or run.cfg.get("inputs.background")
    if bg_path:
        bg_path = Path(bg_path) if run.args.background else run.cfg.path(bg_path)
        trace = subtract_background(trace, read_trace(bg_path))
        inputs.append(bg_path)
    psd = psd_vs_inverse_k(trace, run.cfg.get("psd.window", "hann"), int(run.cfg.get("psd.zero_pad_factor", 4)))
    peaks = psd_peaks(psd, int(run.cfg.get("psd.peaks", 3)))
    for p in peaks:
        print(f"peak at 2/k_d = {p:.1f} nm")
    order = np.argsort(psd.axis)
    run.csv("psd.csv", ["inverse_k_nm", "power"], zip(psd.axis[order], psd.power[order]))
    run.json("psd.json", {"peaks_nm": peaks, "window": psd.window, "zero_pad_factor": psd.zero_pad_factor,
                          "n_samples": psd.n_samples, "step_nm": psd.step, "provenance": _provenance(*inputs)})
    sel = (psd.axis[order] >= 2 * psd.step) & (psd.axis[order] <= 2000)
    run.plot("psd.svg", [("", psd.axis[order][sel], psd.power[order][sel])], "2/k_d (nm)", "PSD (normalized)")


def cmd_snr_map(run: _Run):
    sig = run.args.signal or [str(run.cfg.path(p)) for p in run.cfg.get("inputs.signal_map", [])]
    bg = run.args.background or [str(run.cfg.path(p)) for p in run.cfg.get("inputs.background_map", [])]
    if not sig or not bg:
        raise ConfigError("inputs.signal_map / inputs.background_map: no files given")
    m = snr_map([read_trace(p) for p in sig], [read_trace(p) for p in bg])
    rows = [(P, x, v, u) for P, row, und in zip(m.powers, m.snr, m.undefined) for x, v, u in zip(m.positions, row, und)]
    run.csv("snr_map.csv", ["pump_power_uW", "position_nm", "snr", "undefined"], rows)
    best = m.max_per_power()
    for P, b in zip(m.powers, best):
        print(f"P = {P:g} uW: max SNR = {b:.2f}")
    run.csv("snr_max.csv", ["pump_power_uW", "max_snr"], zip(m.powers, best))
    run.plot("snr_max.svg", [("", m.powers, best)], "pump power (uW)", "max SNR")


def cmd_extract_enhancement(run: _Run):
    path = run.input(run.args.input, "trace")
    trace = read_trace(path)
    inputs = [path]
    bg_path = run.args.background or run.cfg.get("inputs.background")
    if bg_path:
        bg_path = Path(bg_path) if run.args.background else run.cfg.path(bg_path)
        trace = subtract_background(trace, read_trace(bg_path))
        inputs.append(bg_path)
    base = run.args.baseline or run.cfg.get("inputs.baseline_rate_cps") or trace.meta.get("baseline_rate_cps")
    if base is None:
        raise ConfigError("inputs.baseline_rate_cps: no baseline rate (flag, config or trace header)")
    sigma = run.args.baseline_sigma or run.cfg.get("inputs.baseline_sigma_cps") or trace.meta.get("baseline_sigma_cps")
    res = extract_enhancement(trace, float(base), float(sigma) if sigma is not None else None)
    err = f" +/- {res.sigma:.3f}" if res.sigma is not None else " (no stderr: sigma absent)"
    print(f"enhancement = {res.factor:.3f}{err} at {res.peak_position:g} nm")
    run.json("enhancement.json", {"factor": res.factor, "sigma": res.sigma, "peak_position_nm": res.peak_position,
                                  "baseline_rate_cps": float(base),
                                  "baseline_sigma_cps": float(sigma) if sigma is not None else None,
                                  "provenance": _provenance(*inputs)})


def cmd_reproduce_paper(run: _Run):
    checks = reproduce.run(run.out, run.threads)
    for c in checks:
        print(c.line())
    passed = sum(c.passed for c in checks)
    print(f"{passed}/{len(checks)} checks passed")
    print(f"wrote {run.out / 'reproduce_summary.json'}")


COMMANDS = {
    "decay-sweep": (cmd_decay_sweep, "relative decay rate versus emitter-mirror distance"),
    "pattern": (cmd_pattern, "far-field angular emission pattern"),
    "collection": (cmd_collection, "objective collection efficiency and geometric factor"),
    "enhancement-sweep": (cmd_enhancement_sweep, "Purcell x geometric factor versus distance"),
    "pump-wave": (cmd_pump_wave, "pump standing-wave intensity versus mirror position"),
    "synth-scan": (cmd_synth_scan, "synthetic count-rate scan from the forward model"),
    "fit-saturation": (cmd_fit_saturation, "fit a saturation curve"),
    "fit-g2": (cmd_fit_g2, "fit a g2 antibunching histogram"),
    "psd": (cmd_psd, "power spectral density of a scan on the 2/k_d axis"),
    "snr-map": (cmd_snr_map, "signal-to-noise over pump power and position"),
    "extract-enhancement": (cmd_extract_enhancement, "peak count rate relative to the no-mirror rate"),
    "reproduce-paper": (cmd_reproduce_paper, "regenerate all published numbers and print pass/fail"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--out", default=".", help="output directory (default: current)")
    common.add_argument("--seed", type=int, default=0, help="seed for synthetic noise")
    common.add_argument("--threads", type=int, default=1, help="worker processes for sweeps")
    common.add_argument("--format", choices=["csv", "csv+svg"], default="csv")
    common.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override a config key, e.g. geometry.d_nm=30 (repeatable)")
    parser = argparse.ArgumentParser(prog="nvmirror", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, helptext) in COMMANDS.items():
        p = sub.add_parser(name, parents=[common], help=helptext, description=helptext)
        if name in ("fit-saturation", "fit-g2", "psd", "extract-enhancement"):
            p.add_argument("--input", help="input CSV")
        if name in ("psd", "extract-enhancement"):
            p.add_argument("--background", help="background scan to subtract first")
        if name == "extract-enhancement":
            p.add_argument("--baseline", type=float, help="count rate without mirror (cps)")
            p.add_argument("--baseline-sigma", type=float, help="its uncertainty (cps)")
        if name == "snr-map":
            p.add_argument("--signal", nargs="+", help="signal scans, one per pump power")
            p.add_argument("--background", nargs="+", help="background scans, same order")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.seed < 0 or args.seed >= 2**64:
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_INVALID
    try:
        run = _Run(args)
        COMMANDS[args.command][0](run)
    except (QuadratureError, ConvergenceError) as exc:
        print(f"error: numerical non-convergence: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED
    except (ConfigError, TraceError, EmissionError, MaterialError, StackError, SpectrumError, FitError,
            ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

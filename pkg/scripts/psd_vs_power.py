"""How the spectral weight of a scan shifts between the pump and emission periods with pump power.

Synthesizes noise-free scans for one emitter at a range of P/P_sat and reports
the PSD level near 2/k_d = 532 nm and 700 nm for each, under the pump
visibility of the bundled fixtures (override with --visibility).

    python3 scripts/psd_vs_power.py --out runs/psd
"""

import argparse
from dataclasses import replace
from pathlib import Path

import numpy as np

from nvmirror.analysis import psd_vs_inverse_k
from nvmirror.analysis.spectra import power_near
from nvmirror.io import write_csv
from nvmirror.scanmodel import EmitterParams, ScanOptics, default_grid, mirror_factors, synth_scan
from nvmirror.synthdata import fixtures_dir, load_generator


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--visibility", type=float, default=None)
    ap.add_argument("--out", default="runs/psd")
    args = ap.parse_args()
    cfg = load_generator(fixtures_dir() / "generator.json")
    vis = args.visibility if args.visibility is not None else cfg["pump_visibility"]
    optics = replace(ScanOptics(), pump_visibility=vis)
    emitter = EmitterParams(P_sat=150.0, R_inf=1e5)
    D = default_grid()
    factors = mirror_factors(D, emitter, optics)
    rows = []
    for ratio in (0.1, 0.2, 0.5, 1.0, 1.5, 2.0, 3.0, 5.0):
        trace = synth_scan(D, ratio * emitter.P_sat, emitter, optics=optics, factors=factors)
        psd = psd_vs_inverse_k(trace)
        a, b = power_near(psd, 532.0), power_near(psd, 700.0)
        rows.append((ratio, a, b))
        print(f"P/P_sat = {ratio:4.1f}: PSD(532) = {a:.3f}, PSD(700) = {b:.3f}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "psd_vs_power.csv", ["P_over_P_sat", "psd_532", "psd_700"], rows)


if __name__ == "__main__":
    main()

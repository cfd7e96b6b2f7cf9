"""Relative decay rate of horizontal and vertical dipoles facing a silver mirror.

Sweeps the emitter-mirror gap and writes decay_vs_distance.csv (+ .svg), once
for the mirror alone and once with the silica substrate below the emitter, so
the two readings of the mirror geometry can be compared side by side.

    python3 scripts/decay_vs_distance.py --out runs/decay --threads 4
"""

import argparse
import math
import warnings
from pathlib import Path

import numpy as np

from nvmirror import HORIZONTAL, SILICA, SILVER_700, VERTICAL, EmissionModel, EmitterGeometry, mirror
from nvmirror import relative_decay_rate
from nvmirror.io import write_csv
from nvmirror.parallel import ordered_map
from nvmirror.plotting import line_plot

ORIENTS = {"horizontal": HORIZONTAL, "vertical": VERTICAL}


def point(args):
    D, name, with_substrate = args
    lower = mirror(SILICA) if with_substrate else None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return relative_decay_rate(EmitterGeometry(25.0, D), ORIENTS[name], EmissionModel(700.0), lower,
                                   mirror(SILVER_700)).gamma_rel


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--out", default="runs/decay")
    ap.add_argument("--step", type=float, default=10.0)
    ap.add_argument("--stop", type=float, default=2000.0)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    D = np.arange(args.step, args.stop + args.step / 2, args.step)
    cases = [(name, sub) for sub in (False, True) for name in ORIENTS]
    vals = ordered_map(point, [(float(x), n, s) for n, s in cases for x in D], args.threads)
    vals = np.array(vals).reshape(len(cases), len(D))
    header = ["D_nm"] + [f"{n}{'_with_substrate' if s else ''}" for n, s in cases]
    write_csv(out / "decay_vs_distance.csv", header, np.column_stack([D, vals.T]))
    line_plot(out / "decay_vs_distance.svg", [(h, D, v) for h, v in zip(header[1:], vals)],
              "emitter-mirror distance (nm)", "Gamma / Gamma0")
    for h, v in zip(header[1:], vals):
        i = int(np.argmax(v))
        print(f"{h}: max {v[i]:.4f} at {D[i]:g} nm")


if __name__ == "__main__":
    main()

"""Collection efficiency and geometric factor versus objective half-angle.

For each orientation and for no mirror / mirror at --gap nm, prints the
efficiency under the two normalizations in use (collected over radiated power,
and whole lower hemisphere over total decay rate) and writes a table over a
range of half-angles.

    python3 scripts/collection_budget.py --gap 200 --out runs/collection
"""

import argparse
import math
from pathlib import Path

import numpy as np

from nvmirror import HORIZONTAL, SILICA, SILVER_700, VERTICAL, EmissionModel, EmitterGeometry, collection, mirror
from nvmirror.emission import collected_power
from nvmirror.io import write_csv
from nvmirror.plotting import line_plot


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--gap", type=float, default=200.0, help="emitter-mirror distance (nm)")
    ap.add_argument("--d", type=float, default=25.0, help="emitter height above the substrate (nm)")
    ap.add_argument("--out", default="runs/collection")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    model, lower, upper = EmissionModel(700.0), mirror(SILICA), mirror(SILVER_700)
    angles = np.arange(30.0, 89.0, 1.0)
    rows, series = [], []
    for name, o in (("horizontal", HORIZONTAL), ("vertical", VERTICAL)):
        for D in (None, args.gap):
            geom = EmitterGeometry(args.d, D)
            up = upper if D else None
            eff = [collection(geom, o, model, lower, up, math.radians(a)).efficiency for a in angles]
            res = collection(geom, o, model, lower, up, math.radians(73.5))
            alt = collected_power(geom, o, model, lower, up) / res.decay.gamma_rel
            print(f"{name:10s} D={'inf' if D is None else f'{D:g}':>5s}: eta(73.5 deg) = {res.efficiency:.4f}, "
                  f"hemisphere/total = {alt:.4f}")
            label = f"{name}, D={'inf' if D is None else f'{D:g}'}"
            series.append((label, angles, np.array(eff)))
            rows += [(name, D, a, e) for a, e in zip(angles, eff)]
    write_csv(out / "collection_vs_angle.csv", ["orientation", "D_nm", "theta_max_deg", "efficiency"], rows)
    line_plot(out / "collection_vs_angle.svg", series, "collection half-angle in the substrate (deg)",
              "collection efficiency")


if __name__ == "__main__":
    main()

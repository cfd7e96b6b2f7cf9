"""Regenerate the bundled synthetic datasets from their committed generator config.

    python3 scripts/make_fixtures.py              # rebuild files from generator.json
    python3 scripts/make_fixtures.py --calibrate  # re-tune the free knobs first, then rebuild
"""

import argparse
import json

from nvmirror.synthdata import calibrate, fixtures_dir, generate, load_generator


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--calibrate", action="store_true")
    ap.add_argument("--out", default=None, help="output directory (default: the bundled fixtures)")
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()
    out = args.out or fixtures_dir()
    cfg = load_generator()
    if args.calibrate:
        cfg = calibrate(cfg, args.threads)
        (fixtures_dir() / "generator.json").write_text(json.dumps(cfg, indent=2) + "\n")
        for e in cfg["emitters"]:
            print(f"{e['label']}: quantum_efficiency={e['quantum_efficiency']} excess={e['excess']}")
        print(f"snr_map R_inf_cps={cfg['snr_map']['R_inf_cps']}")
    for path in generate(cfg, out, args.threads):
        print(path)


if __name__ == "__main__":
    main()

import csv
import json

import numpy as np
import pytest

from nvmirror.cli import main
from nvmirror.synthdata import fixtures_dir

FX = fixtures_dir()
SHORT = ['--set', 'geometry.D_sweep={"start": 100, "stop": 300, "step": 50}']


def _rows(path):
    with open(path) as f:
        return list(csv.DictReader(f))


def _run(tmp_path, *argv):
    out = tmp_path / "out"
    rc = main([*argv, "--out", str(out)])
    return rc, out


def test_decay_sweep_peak_near_200(tmp_path):
    rc, out = _run(tmp_path, "decay-sweep", "--set", "model.orientations=[\"horizontal\"]",
                   "--set", 'geometry.D_sweep={"start": 100, "stop": 350, "step": 25}')
    assert rc == 0
    rows = _rows(out / "decay_sweep.csv")
    g = np.array([float(r["gamma_rel"]) for r in rows])
    D = np.array([float(r["D_nm"]) for r in rows])
    assert g.max() == pytest.approx(1.4, abs=0.1)
    assert abs(D[np.argmax(g)] - 200) <= 50


def test_collection_and_geometric_factor(tmp_path):
    rc, out = _run(tmp_path, "collection")
    assert rc == 0
    geo = _rows(out / "geometric_factor.csv")
    assert {r["orientation"] for r in geo} == {"horizontal", "vertical"}
    for r in geo:
        assert 1.1 < float(r["geometric_factor"]) < 1.35


def test_pattern_and_pump_wave(tmp_path):
    rc, out = _run(tmp_path, "pattern", "--set", "pattern.n_theta=30", "--set", "geometry.D_nm=200")
    assert rc == 0 and len(_rows(out / "pattern.csv")) == 2 * 2 * 30
    rc, out = _run(tmp_path, "pump-wave", *SHORT)
    assert rc == 0 and len(_rows(out / "pump_wave.csv")) == 5


def test_enhancement_sweep(tmp_path):
    rc, out = _run(tmp_path, "enhancement-sweep", *SHORT)
    assert rc == 0
    for r in _rows(out / "enhancement_sweep.csv"):
        assert float(r["total"]) == pytest.approx(float(r["purcell"]) * float(r["geometric"]))


def test_fit_commands_on_fixtures(tmp_path):
    rc, out = _run(tmp_path, "fit-saturation", "--input", str(FX / "saturation_NVb.csv"))
    assert rc == 0
    fit = json.loads((out / "fit_saturation.json").read_text())
    assert fit["parameters"]["P_sat_uW"] == pytest.approx(224, rel=0.05)
    assert fit["provenance"]["inputs"][0]["digest"].startswith("sha256:")
    rc, out = _run(tmp_path, "fit-g2", "--input", str(FX / "g2_NVb.csv"))
    assert rc == 0
    assert json.loads((out / "fit_g2.json").read_text())["parameters"]["g2_0"] == pytest.approx(0.16, abs=0.02)


def test_psd_on_bundled_high_power_scan(tmp_path):
    rc, out = _run(tmp_path, "psd", "--input", str(FX / "psd_high_power.csv"))
    assert rc == 0
    peaks = json.loads((out / "psd.json").read_text())["peaks_nm"]
    assert peaks[0] == pytest.approx(700, abs=15)


def test_snr_map_and_extraction(tmp_path):
    sig = sorted(FX.glob("snr_signal_*uW.csv"), key=lambda p: int(p.stem.split("_")[-1][:-2]))
    bg = [FX / p.name.replace("signal", "background") for p in sig]
    rc, out = _run(tmp_path, "snr-map", "--signal", *map(str, sig), "--background", *map(str, bg))
    assert rc == 0
    best = _rows(out / "snr_max.csv")
    assert float(best[0]["pump_power_uW"]) == 25.0
    rc, out = _run(tmp_path, "extract-enhancement", "--input", str(FX / "enhancement_NVb.csv"),
                   "--background", str(FX / "enhancement_NVb_background.csv"))
    assert rc == 0
    res = json.loads((out / "enhancement.json").read_text())
    assert res["factor"] == pytest.approx(1.76, abs=0.045)


def test_config_file_inputs_resolve_relative_paths(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"inputs": {"saturation": str(FX / "saturation_NVb.csv")}}))
    rc, out = _run(tmp_path, "fit-saturation", "--config", str(cfg))
    assert rc == 0


def test_synth_scan_is_byte_identical_across_runs_and_threads(tmp_path):
    args = ["synth-scan", "--seed", "9", "--set", "noise.shot=true", "--set", "noise.repeats=2",
            "--set", 'geometry.D_sweep={"start": 225, "stop": 625, "step": 40}', "--format", "csv+svg"]
    a, b, c = (tmp_path / x for x in "abc")
    assert main([*args, "--out", str(a)]) == 0
    assert main([*args, "--out", str(b)]) == 0
    assert main([*args, "--out", str(c), "--threads", "3"]) == 0
    for name in ("synth_scan.csv", "synth_scan.svg"):
        assert (a / name).read_bytes() == (b / name).read_bytes() == (c / name).read_bytes()


def test_invalid_config_exit_code(tmp_path, capsys):
    rc, _ = _run(tmp_path, "collection", "--set", "geometry.d_nm=-5")
    assert rc == 2
    assert "config.geometry.d_nm" in capsys.readouterr().err


def test_missing_input_exit_code(tmp_path):
    rc, _ = _run(tmp_path, "fit-g2", "--input", str(tmp_path / "nope.csv"))
    assert rc == 2
    rc, _ = _run(tmp_path, "fit-g2")
    assert rc == 2


def test_bad_seed_exit_code(tmp_path):
    assert _run(tmp_path, "synth-scan", "--seed", "-1")[0] == 2


def test_nonconvergence_exit_code(tmp_path):
    # a tight tolerance with a one-panel budget cannot converge
    rc, _ = _run(tmp_path, "decay-sweep", "--set", "quadrature.rel_tol=1e-12", "--set", "quadrature.max_intervals=1",
                 "--set",
                 'geometry.D_sweep={"start": 30, "stop": 30, "step": 1}', "--set", "model.orientations=[\"vertical\"]")
    assert rc == 3

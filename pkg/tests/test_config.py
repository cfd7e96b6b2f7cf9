import json
import math

import numpy as np
import pytest

from nvmirror.config import ConfigError, apply_overrides, load_config


def _write(tmp_path, doc, name="run.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc) if not isinstance(doc, str) else doc)
    return p


def test_defaults_without_file():
    cfg = load_config()
    assert cfg.d == 25.0 and cfg.D_values() == [None, 200.0]
    assert cfg.model().wavelength == 700.0
    assert cfg.theta_max == pytest.approx(math.radians(73.5))
    assert cfg.substrate.name == "silica" and cfg.mirror_material.name == "silver"
    assert [n for n, _ in cfg.orientations()] == ["horizontal", "vertical"]
    assert cfg.D_sweep()[0] == 20.0 and cfg.D_sweep()[-1] == 4000.0


def test_file_and_overrides(tmp_path):
    p = _write(tmp_path, {"geometry": {"d_nm": 30, "D_sweep": {"start": 100, "stop": 200, "step": 50}},
                          "model": {"orientations": ["vertical", 45]}})
    cfg = load_config(p, ["geometry.d_nm=40", "materials.mirror={\"name\": \"gold\", \"n\": 0.13, \"k\": 4.1}"])
    assert cfg.d == 40.0
    assert np.array_equal(cfg.D_sweep(), [100.0, 150.0, 200.0])
    assert cfg.mirror_material.n == complex(0.13, 4.1)
    labels = [n for n, _ in cfg.orientations()]
    assert labels == ["vertical", "tilt45"]
    assert cfg.orientations()[1][1].tilt == pytest.approx(math.pi / 4)


def test_null_mirror_and_relative_paths(tmp_path):
    p = _write(tmp_path, {"materials": {"mirror": None}, "inputs": {"trace": "data/scan.csv"}})
    cfg = load_config(p)
    assert cfg.upper_stack() is None
    assert cfg.path(cfg.get("inputs.trace")) == tmp_path / "data" / "scan.csv"
    with pytest.raises(ConfigError, match="substrate and a mirror"):
        cfg.scan_optics()


@pytest.mark.parametrize("doc, where", [
    ({"geometry": {"d_nm": -1}}, "config.geometry.d_nm"),
    ({"geometry": {"dnm": 1}}, "config.geometry"),
    ({"model": {"orientations": ["diagonal"]}}, "config.model.orientations[0]"),
    ({"collection": {"theta_max_deg": 95}}, "config.collection.theta_max_deg"),
    ({"noise": {"repeats": 0}}, "config.noise.repeats"),
])
def test_schema_errors_name_the_key(tmp_path, doc, where):
    with pytest.raises(ConfigError) as info:
        load_config(_write(tmp_path, doc))
    assert str(info.value).startswith(where)


def test_unknown_material(tmp_path):
    with pytest.raises(ConfigError, match="unknown material 'unobtainium'"):
        load_config(_write(tmp_path, {"materials": {"substrate": "unobtainium"}}))


def test_bad_json_reports_line(tmp_path):
    with pytest.raises(ConfigError, match=r"run.json:3: invalid JSON"):
        load_config(_write(tmp_path, '{\n "geometry": {\n  "d_nm": ,\n }\n}'))


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="missing.json"):
        load_config(tmp_path / "missing.json")


def test_override_syntax():
    assert apply_overrides({}, ["a.b=3", "a.c=text"]) == {"a": {"b": 3, "c": "text"}}
    with pytest.raises(ConfigError):
        apply_overrides({}, ["novalue"])
    with pytest.raises(ConfigError):
        apply_overrides({"a": 1}, ["a.b=2"])


def test_reversed_sweep_rejected(tmp_path):
    cfg = load_config(None, ['geometry.D_sweep={"start": 300, "stop": 100, "step": 10}'])
    with pytest.raises(ConfigError):
        cfg.D_sweep()


def test_scan_sections():
    cfg = load_config(None, ["emitter.tilt_deg=0", "noise.shot=true", "noise.repeats=4",
                             'noise.background={"rate_per_uW": 18}', "pump.visibility=0.1"])
    assert cfg.emitter().tilt == 0.0
    n = cfg.noise()
    assert n.shot and n.repeats == 4 and n.background.rate_per_uW == 18 and n.background.period == 266.0
    assert cfg.scan_optics().pump_visibility == 0.1

import json

from nvmirror.synthdata import fixtures_dir, generate, load_generator


def test_bundled_fixtures_regenerate_byte_for_byte(tmp_path):
    cfg = load_generator(fixtures_dir() / "generator.json")
    written = generate(cfg, tmp_path)
    bundled = sorted(p.name for p in fixtures_dir().glob("*.csv"))
    assert sorted(p.name for p in written) == bundled
    for name in bundled:
        assert (tmp_path / name).read_bytes() == (fixtures_dir() / name).read_bytes(), name


def test_generator_config_is_complete():
    cfg = json.loads((fixtures_dir() / "generator.json").read_text())
    assert [e["P_sat_uW"] for e in cfg["emitters"]] == [119, 224, 150]
    assert [e["target_enhancement"] for e in cfg["emitters"]] == [1.44, 1.76, 1.57]
    for e in cfg["emitters"]:
        assert 0 < e["quantum_efficiency"] <= 1 and e["excess"] >= 0
    assert [e["g2_0"] for e in cfg["emitters"]] == [0.24, 0.16, 0.37]

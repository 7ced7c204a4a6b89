import pytest

from rfsquid_lzs.config import PRESETS, config_from_mapping, dump_config, load_config, parse_config_text
from rfsquid_lzs.errors import ConfigError


@pytest.mark.parametrize("preset", sorted(PRESETS))
def test_round_trip(preset):
    cfg = config_from_mapping({"preset": preset})
    again = parse_config_text(dump_config(cfg))
    assert again.values == cfg.values
    assert again.preset == cfg.preset


def test_round_trip_with_custom_crossing():
    text = """
    preset = six_level
    diagram.crossings = d1, d2, d3   # three crossings
    diagram.d3.gap_ghz = 0.02
    diagram.d3.anchors = 0:200, 10:220
    """
    cfg = parse_config_text(text)
    assert [c.label for c in cfg.level_diagram().crossings] == ["d1", "d2", "d3"]
    assert parse_config_text(dump_config(cfg)).values == cfg.values


def test_comments_and_blank_lines():
    cfg = parse_config_text("# header\n\npreset = four_level  # four-level\nsweep.amp_steps = 11\n")
    assert cfg["sweep.amp_steps"] == 11
    assert cfg["model"] == "four"


def test_unknown_keys_are_listed():
    with pytest.raises(ConfigError) as info:
        parse_config_text("lz.delta9 = 1\nfoo.bar = 2\n")
    assert "foo.bar" in str(info.value) and "lz.delta9" in str(info.value)


@pytest.mark.parametrize("text", [
    "sweep.flux_steps = 0",
    "sweep.amp_steps = -3",
    "sweep.flux_min_mphi0 = 5\nsweep.flux_max_mphi0 = 1",
    "model = eight",
    "output.format = png",
    "sweep.amp_steps = many",
    "preset = nonexistent",
    "sweep.amp_steps = 3\nsweep.amp_steps = 4",
    "no equals sign",
    "diagram.d1.anchors = 0:1, 0:2",
    "diagram.crossings = d1",
    "threads = -1",
])
def test_rejected(text):
    with pytest.raises(ConfigError):
        parse_config_text(text)


def test_load_config_missing_file(tmp_path):
    with pytest.raises(OSError):
        load_config(tmp_path / "missing.cfg")


def test_auto_values():
    cfg = config_from_mapping({"preset": "six_level", "thermal.beta_per_ghz": "auto"})
    assert cfg.beta == pytest.approx(2.39962, rel=1e-5)
    cfg = config_from_mapping({"preset": "six_level", "thermal.beta_per_ghz": "1.5",
                               "kinetics.gamma01_ghz": "auto"})
    assert cfg.beta == 1.5 and cfg.kinetic_params().gamma01 is None

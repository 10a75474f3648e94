import pytest

from msvad.config import (
    PipelineConfig,
    config_from_dict,
    config_to_toml,
    load_config,
    save_config,
)
from msvad.errors import ConfigError


def test_defaults_reproduce_operating_constants():
    cfg = PipelineConfig()
    assert cfg.fusion.window_ms == 250
    assert cfg.fusion.speech_threshold == 0.5
    assert cfg.stream.target_s == 180.0
    assert cfg.stream.carryover_s == 120.0
    assert cfg.prune.min_duration_s == 10.0
    assert cfg.audio.hop_ms == 10 and cfg.audio.frame_ms == 25


def test_toml_roundtrip(tmp_path):
    cfg = PipelineConfig()
    path = tmp_path / "cfg.toml"
    save_config(cfg, path)
    assert load_config(path) == cfg


def test_shipped_default_config_matches_defaults():
    from pathlib import Path

    shipped = Path(__file__).parent.parent / "configs" / "default.toml"
    assert load_config(shipped) == PipelineConfig()


def test_unknown_key_rejected():
    with pytest.raises(ConfigError):
        config_from_dict({"fusion": {"window_ms": 250, "wat": 1}})


def test_unknown_section_rejected():
    with pytest.raises(ConfigError):
        config_from_dict({"fusiom": {"window_ms": 250}})


def test_wrong_schema_version_rejected():
    with pytest.raises(ConfigError):
        config_from_dict({"schema_version": 2})


def test_partial_config_fills_defaults():
    cfg = config_from_dict({"fusion": {"speech_threshold": 0.6}})
    assert cfg.fusion.speech_threshold == 0.6
    assert cfg.fusion.window_ms == 250
    assert cfg.vb.loop_prob == 0.99


def test_stream_consistency_enforced():
    with pytest.raises(ConfigError):
        config_from_dict({"stream": {"target_s": 100.0, "carryover_s": 150.0}})


def test_bad_value_rejected():
    with pytest.raises(ConfigError):
        config_from_dict({"vb": {"loop_prob": 1.5}})


def test_vad_sections_nest_under_vad():
    cfg = config_from_dict({"vad": {"energy": {"release": 0.001}}})
    assert cfg.vad_energy.release == 0.001
    text = config_to_toml(cfg)
    assert "[vad.energy]" in text

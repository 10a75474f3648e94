"""Single TOML config document covering every pipeline tunable.

Defaults reproduce the stated operating constants: 250 ms fusion window, mean
window entropy scaled to 0.5, 180/120 s stream buffer, 10 s speaker pruning.
Unknown keys are rejected so typos cannot silently fall back to defaults.
"""

from __future__ import annotations

import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .clustering import AhcConfig, VbHmmConfig
from .errors import ConfigError

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class AudioConfig:
    hop_ms: int = 10
    frame_ms: int = 25


@dataclass(frozen=True)
class EnergyVadConfig:
    slope: float = 2.0
    scale: float = 1.0
    onset_margin: float = 2.0
    release: float = 0.0005


@dataclass(frozen=True)
class FlatnessVadConfig:
    midpoint: float = 0.5
    slope: float = 8.0


@dataclass(frozen=True)
class VoicingVadConfig:
    f0_min_hz: float = 60.0
    f0_max_hz: float = 400.0


@dataclass(frozen=True)
class FusionConfig:
    window_ms: int = 250
    speech_threshold: float = 0.5
    fill_gap_s: float = 0.25
    min_segment_s: float = 0.25


@dataclass(frozen=True)
class EmbeddingConfig:
    win_s: float = 1.5
    step_s: float = 0.75


@dataclass(frozen=True)
class PruneConfig:
    min_duration_s: float = 10.0


@dataclass(frozen=True)
class StreamConfig:
    target_s: float = 180.0
    carryover_s: float = 120.0


@dataclass(frozen=True)
class PipelineConfig:
    schema_version: int = SCHEMA_VERSION
    audio: AudioConfig = field(default_factory=AudioConfig)
    vad_energy: EnergyVadConfig = field(default_factory=EnergyVadConfig)
    vad_flatness: FlatnessVadConfig = field(default_factory=FlatnessVadConfig)
    vad_voicing: VoicingVadConfig = field(default_factory=VoicingVadConfig)
    fusion: FusionConfig = field(default_factory=FusionConfig)
    embeddings: EmbeddingConfig = field(default_factory=EmbeddingConfig)
    ahc: AhcConfig = field(default_factory=AhcConfig)
    vb: VbHmmConfig = field(default_factory=VbHmmConfig)
    prune: PruneConfig = field(default_factory=PruneConfig)
    stream: StreamConfig = field(default_factory=StreamConfig)


_SECTIONS = {
    "audio": ("audio", AudioConfig),
    "vad.energy": ("vad_energy", EnergyVadConfig),
    "vad.flatness": ("vad_flatness", FlatnessVadConfig),
    "vad.voicing": ("vad_voicing", VoicingVadConfig),
    "fusion": ("fusion", FusionConfig),
    "embeddings": ("embeddings", EmbeddingConfig),
    "ahc": ("ahc", AhcConfig),
    "vb": ("vb", VbHmmConfig),
    "prune": ("prune", PruneConfig),
    "stream": ("stream", StreamConfig),
}


def _build_section(section_name: str, cls, data: dict):
    allowed = {f.name for f in fields(cls)}
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"[{section_name}]: unknown keys {sorted(unknown)}")
    try:
        return cls(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{section_name}]: {exc}") from None


def config_from_dict(doc: dict) -> PipelineConfig:
    doc = dict(doc)
    version = doc.pop("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {version}, expected {SCHEMA_VERSION}")

    flat: dict[str, dict] = {}
    vad = doc.pop("vad", {})
    if not isinstance(vad, dict):
        raise ConfigError("[vad] must be a table")
    for sub, data in vad.items():
        flat[f"vad.{sub}"] = data
    for key, data in doc.items():
        flat[key] = data

    kwargs = {}
    for section, data in flat.items():
        if section not in _SECTIONS:
            raise ConfigError(f"unknown config section [{section}]")
        if not isinstance(data, dict):
            raise ConfigError(f"[{section}] must be a table")
        attr, cls = _SECTIONS[section]
        kwargs[attr] = _build_section(section, cls, data)
    cfg = PipelineConfig(**kwargs)
    if not cfg.stream.carryover_s < cfg.stream.target_s:
        raise ConfigError("[stream]: carryover_s must be less than target_s")
    if not 0 < cfg.stream.carryover_s:
        raise ConfigError("[stream]: carryover_s must be positive")
    return cfg


def load_config(path) -> PipelineConfig:
    try:
        with Path(path).open("rb") as fh:
            doc = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return config_from_dict(doc)


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, float)):
        return repr(v)
    return '"' + str(v).replace("\\", "\\\\").replace('"', '\\"') + '"'


def config_to_toml(cfg: PipelineConfig) -> str:
    lines = [f"schema_version = {cfg.schema_version}", ""]
    for section, (attr, _) in _SECTIONS.items():
        lines.append(f"[{section}]")
        for key, value in asdict(getattr(cfg, attr)).items():
            lines.append(f"{key} = {_toml_value(value)}")
        lines.append("")
    return "\n".join(lines)


def save_config(cfg: PipelineConfig, path) -> None:
    Path(path).write_text(config_to_toml(cfg), encoding="utf-8", newline="\n")

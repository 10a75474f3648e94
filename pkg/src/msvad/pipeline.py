"""End-to-end composition: decode -> VAD bank -> fusion -> clustering, plus the
streaming replay harness."""

from __future__ import annotations

from dataclasses import dataclass

from .audio_io import AudioClip, FeatureKind, compute_features, decode_wav, frame_signal
from .clustering import DiarizationResult, diarize_segments
from .config import PipelineConfig
from .embeddings import load_embeddings
from .fusion import SmoothingConfig, WindowDecision, fuse
from .segments import LabeledSegmentation
from .stream import DecisionEvent, replay
from .vad_bank import (
    VadBank,
    load_prob_stream,
    vad_energy,
    vad_periodicity,
    vad_spectral,
)


@dataclass(frozen=True)
class PipelineOutput:
    fused: LabeledSegmentation
    decisions: list[WindowDecision]
    result: DiarizationResult


def build_bank(
    clip: AudioClip,
    cfg: PipelineConfig = PipelineConfig(),
    prob_files=(),
) -> VadBank:
    """Three built-in streams plus any external msvad-probs files on one grid."""
    grid = frame_signal(clip, cfg.audio.hop_ms, cfg.audio.frame_ms)
    energy_feats = compute_features(clip, grid, FeatureKind.LOG_ENERGY)
    mel_feats = compute_features(clip, grid, FeatureKind.LOG_MEL, 40)
    e, f, v = cfg.vad_energy, cfg.vad_flatness, cfg.vad_voicing
    streams = [
        vad_energy(
            energy_feats,
            slope=e.slope,
            scale=e.scale,
            onset_margin=e.onset_margin,
            release=e.release,
        ),
        vad_spectral(mel_feats, midpoint=f.midpoint, slope=f.slope),
        vad_periodicity(clip, grid, f0_min_hz=v.f0_min_hz, f0_max_hz=v.f0_max_hz),
    ]
    for path in prob_files:
        streams.append(load_prob_stream(path, grid))
    return VadBank(streams=tuple(streams))


def _smoothing(cfg: PipelineConfig) -> SmoothingConfig | None:
    if cfg.fusion.fill_gap_s <= 0.0 and cfg.fusion.min_segment_s <= 0.0:
        return None
    return SmoothingConfig(
        fill_gap_s=cfg.fusion.fill_gap_s, min_segment_s=cfg.fusion.min_segment_s
    )


def fuse_clip(
    clip: AudioClip,
    cfg: PipelineConfig = PipelineConfig(),
    prob_files=(),
    recording_id: str = "recording",
):
    bank = build_bank(clip, cfg, prob_files)
    return fuse(
        bank,
        window_ms=cfg.fusion.window_ms,
        speech_threshold=cfg.fusion.speech_threshold,
        smoothing=_smoothing(cfg),
        recording_id=recording_id,
    )


def analyze_clip(
    clip: AudioClip,
    cfg: PipelineConfig = PipelineConfig(),
    prob_files=(),
    emb_file=None,
    recording_id: str = "recording",
) -> PipelineOutput:
    """Offline diarization of one clip; returns the fused segmentation, the
    per-window fusion decisions, and the pruned speaker-labeled result."""
    decisions, fused = fuse_clip(clip, cfg, prob_files, recording_id)
    embeddings = load_embeddings(emb_file) if emb_file else None
    result = diarize_segments(
        fused,
        clip=clip,
        embeddings=embeddings,
        win_s=cfg.embeddings.win_s,
        step_s=cfg.embeddings.step_s,
        ahc=cfg.ahc,
        vb=cfg.vb,
        prune_min_s=cfg.prune.min_duration_s,
    )
    return PipelineOutput(fused=fused, decisions=decisions, result=result)


def analyze_file(path, cfg=PipelineConfig(), prob_files=(), emb_file=None, recording_id=None):
    clip = decode_wav(path)
    rec_id = recording_id or _stem(path)
    return analyze_clip(clip, cfg, prob_files, emb_file, rec_id)


def stream_clip(
    clip: AudioClip,
    cfg: PipelineConfig = PipelineConfig(),
    prob_files=(),
    recording_id: str = "recording",
    real_time: bool = False,
    on_event=None,
) -> list[DecisionEvent]:
    """Streaming replay: fuse the whole file as the speech gate, then feed the
    speech through the buffer; each trigger diarizes the buffered spans."""
    _, fused = fuse_clip(clip, cfg, prob_files, recording_id)

    def count_speakers(spans) -> int:
        buffered = LabeledSegmentation(
            recording_id,
            tuple(_as_segments(spans)),
            clip.duration_seconds,
        )
        result = diarize_segments(
            buffered,
            clip=clip,
            win_s=cfg.embeddings.win_s,
            step_s=cfg.embeddings.step_s,
            ahc=cfg.ahc,
            vb=cfg.vb,
            prune_min_s=cfg.prune.min_duration_s,
        )
        return result.speaker_count

    return replay(
        fused,
        count_speakers,
        target_s=cfg.stream.target_s,
        carryover_s=cfg.stream.carryover_s,
        real_time=real_time,
        on_event=on_event,
    )


def _as_segments(spans):
    from .segments import Segment

    return [Segment(start_s=a, end_s=b) for a, b in spans]


def _stem(path) -> str:
    from pathlib import Path

    return Path(path).stem

"""Multi-stream VAD fusion by normalized-entropy selection.

Per classifier, window entropies are scaled so their mean over the analysis
buffer is 0.5; every 250 ms window then adopts the speech/non-speech verdict of
the classifier with the lowest normalized entropy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DomainError,
    EmptyBank,
    InvalidGrid,
    WindowCountMismatch,
)
from .segments import LabeledSegmentation, Segment, merge_contiguous
from .vad_bank import FrameProbStream, VadBank

TARGET_MEAN_ENTROPY = 0.5
DEFAULT_WINDOW_MS = 250


@dataclass(frozen=True)
class EntropyProfile:
    """One classifier's raw and normalized window entropies over the buffer."""

    source_id: str
    raw_window_entropies: np.ndarray
    scale: float
    normalized_entropies: np.ndarray
    degenerate: bool = False  # raw mean was 0 (fully confident everywhere)


@dataclass(frozen=True)
class WindowDecision:
    window_index: int
    window_span: tuple[float, float]
    chosen_source: str
    per_source_entropy: dict[str, float]
    is_speech: bool


@dataclass(frozen=True)
class SmoothingConfig:
    """Post-fusion cleanup: fill short non-speech gaps, then drop short islands.

    Both comparisons are strict, so a gap or island of exactly the window length
    is left untouched by the defaults.
    """

    fill_gap_s: float = 0.25
    min_segment_s: float = 0.25


def binary_entropy(p: float) -> float:
    """H(p) in bits, with 0*log2(0) taken as 0."""
    if not (0.0 <= p <= 1.0):
        raise DomainError(f"probability outside [0, 1]: {p}")
    if p == 0.0 or p == 1.0:
        return 0.0
    return -p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p)


def _entropy_bits(p: np.ndarray) -> np.ndarray:
    out = np.zeros_like(p)
    interior = (p > 0.0) & (p < 1.0)
    q = p[interior]
    out[interior] = -(q * np.log2(q) + (1.0 - q) * np.log2(1.0 - q))
    return out


def _frames_per_window(grid, window_ms: int) -> int:
    if window_ms <= 0 or window_ms % grid.hop_ms != 0:
        raise InvalidGrid(
            f"window {window_ms} ms must be a positive multiple of hop {grid.hop_ms} ms"
        )
    return window_ms // grid.hop_ms


def _window_reduce(values: np.ndarray, fpw: int) -> np.ndarray:
    """Mean of each consecutive fpw-sized group; the final partial group uses the
    frames it has."""
    n = len(values)
    n_windows = (n + fpw - 1) // fpw
    out = np.empty(n_windows)
    for w in range(n_windows):
        out[w] = values[w * fpw : (w + 1) * fpw].mean()
    return out


def window_entropies(stream: FrameProbStream, window_ms: int = DEFAULT_WINDOW_MS) -> np.ndarray:
    """Raw window entropy = mean per-frame binary entropy of frames whose start
    lies in the window."""
    fpw = _frames_per_window(stream.grid, window_ms)
    if stream.grid.n_frames == 0:
        raise InvalidGrid("cannot window an empty stream")
    return _window_reduce(_entropy_bits(stream.probs), fpw)


def window_mean_probs(stream: FrameProbStream, window_ms: int = DEFAULT_WINDOW_MS) -> np.ndarray:
    fpw = _frames_per_window(stream.grid, window_ms)
    if stream.grid.n_frames == 0:
        raise InvalidGrid("cannot window an empty stream")
    return _window_reduce(stream.probs, fpw)


def normalize_profiles(raw_by_source) -> list[EntropyProfile]:
    """Scale each source's raw window entropies so its mean is TARGET_MEAN_ENTROPY.

    A degenerate source (raw mean 0, i.e. fully confident in every window) keeps
    scale 1 and is flagged; it legitimately wins every window.
    """
    items = list(raw_by_source.items()) if hasattr(raw_by_source, "items") else list(raw_by_source)
    if not items:
        raise WindowCountMismatch("no sources to normalize")
    counts = {len(raw) for _, raw in items}
    if len(counts) != 1:
        raise WindowCountMismatch(f"window counts differ across sources: {sorted(counts)}")
    profiles = []
    for source_id, raw in items:
        raw = np.asarray(raw, dtype=np.float64)
        mean = raw.mean() if raw.size else 0.0
        degenerate = mean <= 0.0
        scale = 1.0 if degenerate else TARGET_MEAN_ENTROPY / mean
        profiles.append(
            EntropyProfile(
                source_id=source_id,
                raw_window_entropies=raw,
                scale=scale,
                normalized_entropies=raw * scale,
                degenerate=degenerate,
            )
        )
    return profiles


def _apply_smoothing(segments: list[Segment], smoothing: SmoothingConfig) -> list[Segment]:
    if not segments:
        return []
    filled = [segments[0]]
    for seg in segments[1:]:
        gap = seg.start_s - filled[-1].end_s
        if 0.0 < gap < smoothing.fill_gap_s:
            filled[-1] = Segment(filled[-1].start_s, seg.end_s)
        else:
            filled.append(seg)
    return [s for s in filled if not (s.duration_s < smoothing.min_segment_s)]


def decide_windows(
    raw_by_source,
    mean_probs_by_source,
    duration_s: float,
    window_ms: int = DEFAULT_WINDOW_MS,
    speech_threshold: float = 0.5,
) -> list[WindowDecision]:
    """Decision core shared by fuse(): normalize each source's raw window
    entropies, pick the per-window argmin (ties to the earliest source), take the
    winner's verdict from its mean frame probability."""
    profiles = normalize_profiles(raw_by_source)
    norm = np.stack([p.normalized_entropies for p in profiles])  # (S, W)
    means = np.stack([np.asarray(m, dtype=np.float64) for _, m in mean_probs_by_source])
    if means.shape != norm.shape:
        raise WindowCountMismatch(
            f"mean-probability table {means.shape} does not match entropies {norm.shape}"
        )
    chosen = np.argmin(norm, axis=0)  # first minimum wins: bank-order tie-break
    speech = means[chosen, np.arange(norm.shape[1])] >= speech_threshold

    window_s = window_ms / 1000.0
    decisions = []
    for w in range(norm.shape[1]):
        span = (w * window_s, min((w + 1) * window_s, duration_s))
        decisions.append(
            WindowDecision(
                window_index=w,
                window_span=span,
                chosen_source=profiles[chosen[w]].source_id,
                per_source_entropy={
                    p.source_id: float(norm[i, w]) for i, p in enumerate(profiles)
                },
                is_speech=bool(speech[w]),
            )
        )
    return decisions


def segments_from_decisions(
    decisions,
    duration_s: float,
    smoothing: SmoothingConfig | None = SmoothingConfig(),
    recording_id: str = "recording",
) -> LabeledSegmentation:
    segments: list[Segment] = []
    for d in decisions:
        if d.is_speech:
            segments.append(Segment(*d.window_span))
    segments = merge_contiguous(segments)
    if smoothing is not None:
        segments = _apply_smoothing(segments, smoothing)
    return LabeledSegmentation(recording_id, tuple(segments), duration_s)


def fuse(
    bank: VadBank,
    window_ms: int = DEFAULT_WINDOW_MS,
    speech_threshold: float = 0.5,
    smoothing: SmoothingConfig | None = SmoothingConfig(),
    recording_id: str = "recording",
) -> tuple[list[WindowDecision], LabeledSegmentation]:
    """Select, per window, the classifier with the lowest normalized entropy and
    adopt its verdict; merge speech windows into an unlabeled segmentation.

    Ties go to the earliest stream in bank order. A window is speech when the
    chosen stream's mean frame probability reaches speech_threshold. Pass
    smoothing=None to keep the raw window verdicts.
    """
    if len(bank.streams) < 2:
        raise EmptyBank(f"fusion needs at least 2 streams, got {len(bank.streams)}")
    grid = bank.grid
    duration_s = grid.duration_s
    if grid.n_frames == 0:
        return [], LabeledSegmentation(recording_id, (), duration_s)

    decisions = decide_windows(
        [(s.source_id, window_entropies(s, window_ms)) for s in bank.streams],
        [(s.source_id, window_mean_probs(s, window_ms)) for s in bank.streams],
        duration_s,
        window_ms,
        speech_threshold,
    )
    return decisions, segments_from_decisions(decisions, duration_s, smoothing, recording_id)

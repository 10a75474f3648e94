"""Per-frame speech-probability streams: three built-in signal VADs plus a wire-format loader.

The built-ins are deterministic stand-ins for neural classifiers; externally
computed streams (including neural ones) enter through the msvad-probs format:

    #msvad-probs v1 hop_ms=<int> source=<id>
    0.123
    0.456
    ...
"""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .audio_io import (
    SILENCE_FLOOR,
    AudioClip,
    FeatureKind,
    FeatureMatrix,
    FrameGrid,
    _check_grid_matches,
)
from .errors import FormatError, GridMismatch, WireFormatWarning, WrongFeatureKind


@dataclass(frozen=True)
class FrameProbStream:
    """One classifier's per-frame speech probabilities on a shared grid."""

    source_id: str
    grid: FrameGrid
    probs: np.ndarray
    clamp_count: int = 0  # values pulled back into [0, 1] by the loader

    def __post_init__(self):
        if not self.source_id:
            raise ValueError("source_id must be nonempty")
        if len(self.probs) != self.grid.n_frames:
            raise GridMismatch(
                f"{self.source_id}: {len(self.probs)} probabilities for "
                f"{self.grid.n_frames}-frame grid"
            )
        if self.probs.size and (self.probs.min() < 0.0 or self.probs.max() > 1.0):
            raise ValueError(f"{self.source_id}: probabilities outside [0, 1]")


@dataclass(frozen=True)
class VadBank:
    """Ordered collection of streams on one common grid; order breaks fusion ties."""

    streams: tuple[FrameProbStream, ...]

    def __post_init__(self):
        if not self.streams:
            raise ValueError("bank needs at least one stream")
        ids = [s.source_id for s in self.streams]
        if len(set(ids)) != len(ids):
            raise ValueError(f"duplicate source ids in bank: {ids}")
        g0 = self.streams[0].grid
        for s in self.streams[1:]:
            if (s.grid.hop_ms, s.grid.frame_ms, s.grid.n_frames) != (
                g0.hop_ms,
                g0.frame_ms,
                g0.n_frames,
            ):
                raise GridMismatch(
                    f"stream {s.source_id} grid {s.grid} differs from bank grid {g0}"
                )

    @property
    def grid(self) -> FrameGrid:
        return self.streams[0].grid


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


# Energy VAD constants (calibration choices, also exposed through PipelineConfig):
# the decision floor sits ONSET_MARGIN nats above a tracked noise floor that
# attacks instantly on minima and releases exponentially at RELEASE per frame.
# The release time constant (~20 s at 10 ms hop) must exceed typical speech
# turns, or the floor climbs into long utterances.
ENERGY_SLOPE = 2.0
ENERGY_SCALE = 1.0
ENERGY_ONSET_MARGIN = 2.0
ENERGY_RELEASE = 0.0005


def vad_energy(
    features: FeatureMatrix,
    *,
    slope: float = ENERGY_SLOPE,
    scale: float = ENERGY_SCALE,
    onset_margin: float = ENERGY_ONSET_MARGIN,
    release: float = ENERGY_RELEASE,
    source_id: str = "energy",
) -> FrameProbStream:
    """Log-energy VAD: p_t = sigmoid(slope * (E_t - floor_t) / scale) where floor_t
    is the tracked noise floor plus onset_margin."""
    if features.kind is not FeatureKind.LOG_ENERGY:
        raise WrongFeatureKind(f"vad_energy needs LOG_ENERGY features, got {features.kind}")
    energy = features.values[:, 0]
    floor = np.empty_like(energy)
    f = SILENCE_FLOOR
    for t, e in enumerate(energy):
        if e < f:
            f = e
        else:
            f = f + release * (e - f)
        floor[t] = f
    probs = _sigmoid(slope * (energy - (floor + onset_margin)) / scale)
    return FrameProbStream(source_id=source_id, grid=features.grid, probs=probs)


# Spectral-flatness VAD constants: flatness of the mel spectrum is mapped through a
# falling logistic centered at FLATNESS_MIDPOINT.
FLATNESS_MIDPOINT = 0.5
FLATNESS_SLOPE = 8.0


def vad_spectral(
    features: FeatureMatrix,
    *,
    midpoint: float = FLATNESS_MIDPOINT,
    slope: float = FLATNESS_SLOPE,
    source_id: str = "flatness",
) -> FrameProbStream:
    """Spectral-flatness VAD: peaked spectra (speech) score high, flat ones low.

    Flatness = geometric mean / arithmetic mean of the mel-band energies, taken
    from the log-mel values. An all-silent frame (every band at the silence
    floor) has undefined flatness and is pinned to p = 0.
    """
    if features.kind is not FeatureKind.LOG_MEL:
        raise WrongFeatureKind(f"vad_spectral needs LOG_MEL features, got {features.kind}")
    vals = features.values
    if vals.shape[0] == 0:
        return FrameProbStream(source_id=source_id, grid=features.grid, probs=np.zeros(0))
    shift = vals.max(axis=1, keepdims=True)
    flatness = np.exp(np.mean(vals - shift, axis=1)) / np.mean(np.exp(vals - shift), axis=1)
    probs = _sigmoid(-slope * (flatness - midpoint))
    silent = vals.max(axis=1) <= SILENCE_FLOOR + 1e-6
    probs[silent] = 0.0
    return FrameProbStream(source_id=source_id, grid=features.grid, probs=probs)


def vad_periodicity(
    clip: AudioClip,
    grid: FrameGrid,
    *,
    f0_min_hz: float = 60.0,
    f0_max_hz: float = 400.0,
    source_id: str = "voicing",
) -> FrameProbStream:
    """Voicing VAD: p_t is the largest normalized autocorrelation peak over lags
    covering the 60-400 Hz pitch range; silent frames score 0."""
    _check_grid_matches(clip, grid)
    sr = clip.sample_rate
    lag_min = max(1, int(np.floor(sr / f0_max_hz)))
    lag_max = max(lag_min, int(np.ceil(sr / f0_min_hz)))
    frame_len = round(grid.frame_ms * sr / 1000)
    if grid.n_frames == 0:
        return FrameProbStream(source_id=source_id, grid=grid, probs=np.zeros(0))

    # Each row holds frame_len + lag_max samples starting at the frame start,
    # zero-padded past the clip end.
    starts = np.rint(np.arange(grid.n_frames) * grid.hop_ms * sr / 1000).astype(np.int64)
    width = frame_len + lag_max
    idx = starts[:, None] + np.arange(width)[None, :]
    valid = idx < len(clip.samples)
    rows = clip.samples[np.minimum(idx, len(clip.samples) - 1)]
    rows[~valid] = 0.0

    # Cross-correlate the leading frame_len samples against the whole row via FFT:
    # corr[:, tau] = sum_{t<frame_len} rows[:, t] * rows[:, t+tau]; the head is
    # zero beyond frame_len, so n_fft >= width already prevents circular wrap.
    n_fft = 1 << int(width - 1).bit_length()
    head = np.zeros_like(rows)
    head[:, :frame_len] = rows[:, :frame_len]
    corr = np.fft.irfft(
        np.conj(np.fft.rfft(head, n=n_fft, axis=1)) * np.fft.rfft(rows, n=n_fft, axis=1),
        n=n_fft,
        axis=1,
    )[:, : lag_max + 1]

    sq = np.cumsum(rows * rows, axis=1)
    e0 = sq[:, frame_len - 1]
    lags = np.arange(lag_min, lag_max + 1)
    e_shift = sq[:, lags + frame_len - 1] - np.where(
        lags[None, :] > 0, sq[:, lags - 1], 0.0
    )
    denom = np.sqrt(e0[:, None] * e_shift)
    with np.errstate(divide="ignore", invalid="ignore"):
        norm = np.where(denom > 0, corr[:, lag_min:] / denom, 0.0)
    probs = np.clip(norm.max(axis=1), 0.0, 1.0)
    probs[e0 <= 0.0] = 0.0
    return FrameProbStream(source_id=source_id, grid=grid, probs=probs)


_HEADER_RE = re.compile(r"^#msvad-probs v1 hop_ms=(\d+) source=(\S+)\s*$")


def load_prob_stream(path, expected_grid: FrameGrid) -> FrameProbStream:
    """Read an msvad-probs file and map it onto expected_grid.

    When the file's hop differs from the grid's, each grid frame takes the value
    of the file frame containing its start time; the hops must be related by an
    integer ratio. Out-of-range values are clamped to [0, 1], counted on the
    returned stream, and reported through a WireFormatWarning.
    """
    text = Path(path).read_text(encoding="utf-8")
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise FormatError(f"{path}: empty file")
    m = _HEADER_RE.match(lines[0])
    if not m:
        raise FormatError(f"{path}: bad header {lines[0]!r}")
    file_hop = int(m.group(1))
    source_id = m.group(2)
    if file_hop <= 0:
        raise FormatError(f"{path}: hop_ms must be positive, got {file_hop}")

    values = np.empty(len(lines) - 1)
    for i, line in enumerate(lines[1:]):
        try:
            v = float(line)
        except ValueError:
            raise FormatError(f"{path}: line {i + 2}: not a number: {line!r}") from None
        if not np.isfinite(v):
            raise FormatError(f"{path}: line {i + 2}: non-finite value")
        values[i] = v

    grid_hop = expected_grid.hop_ms
    if file_hop % grid_hop != 0 and grid_hop % file_hop != 0:
        raise GridMismatch(
            f"{path} (source {source_id}): file hop {file_hop} ms is not an integer "
            f"ratio of grid hop {grid_hop} ms"
        )
    if expected_grid.n_frames > 0 and len(values) == 0:
        raise FormatError(f"{path}: no probability values")

    clamped = np.clip(values, 0.0, 1.0)
    clamp_count = int(np.sum(clamped != values))
    if clamp_count:
        warnings.warn(
            f"{path}: clamped {clamp_count} value(s) into [0, 1]", WireFormatWarning
        )

    if expected_grid.n_frames == 0:
        probs = np.zeros(0)
    else:
        idx = (np.arange(expected_grid.n_frames, dtype=np.int64) * grid_hop) // file_hop
        expected_values = int(idx[-1]) + 1
        # Frame-count conventions differ at the recording tail (complete-frame
        # grids vs per-hop emitters); tolerate up to one frame of slack.
        slack = -(-expected_grid.frame_ms // file_hop)
        if abs(len(values) - expected_values) > slack:
            warnings.warn(
                f"{path}: {len(values)} values where the grid implies {expected_values}; "
                "nearest frames reused at the edges",
                WireFormatWarning,
            )
        probs = clamped[np.minimum(idx, len(clamped) - 1)]
    return FrameProbStream(
        source_id=source_id, grid=expected_grid, probs=probs, clamp_count=clamp_count
    )


def write_prob_stream(stream: FrameProbStream, path) -> None:
    """Serialize a stream in the msvad-probs wire format (LF endings, UTF-8)."""
    lines = [f"#msvad-probs v1 hop_ms={stream.grid.hop_ms} source={stream.source_id}"]
    lines.extend(format(p, ".6f") for p in stream.probs)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")

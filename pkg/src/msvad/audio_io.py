"""WAV decoding, uniform framing, and spectral features feeding the VADs and embedder."""

from __future__ import annotations

import struct
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from pathlib import Path

import numpy as np

from .errors import CorruptFile, InvalidGrid, UnsupportedFormat

# Energy floor added before every log so silence maps to a finite, documented
# value. Kept within ~10 nats of quiet speech so silent frames inside a speech
# span perturb MFCC statistics instead of dominating them.
SILENCE_EPS = 1e-5
SILENCE_FLOOR = float(np.log(SILENCE_EPS))

# Mel filterbank: 40 triangular filters between 50 Hz and Nyquist, HTK mel scale
# (m = 2595 log10(1 + f/700)).  Fixed here so feature output is reproducible.
MEL_LOW_HZ = 50.0
N_MELS = 40

_WAVE_FORMAT_PCM = 0x0001
_WAVE_FORMAT_IEEE_FLOAT = 0x0003
_WAVE_FORMAT_EXTENSIBLE = 0xFFFE


class FeatureKind(Enum):
    LOG_MEL = "log_mel"
    MFCC = "mfcc"
    LOG_ENERGY = "log_energy"


@dataclass(frozen=True)
class AudioClip:
    """Mono audio in [-1, 1] at its native rate. channel_count is the pre-mixdown count."""

    samples: np.ndarray
    sample_rate: int
    channel_count: int = 1

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")

    @property
    def duration_seconds(self) -> float:
        return len(self.samples) / self.sample_rate

    @property
    def duration_ms(self) -> float:
        return len(self.samples) * 1000.0 / self.sample_rate


@dataclass(frozen=True)
class FrameGrid:
    """Uniform analysis grid: frame i covers [i*hop_ms, i*hop_ms + frame_ms)."""

    hop_ms: int
    frame_ms: int
    n_frames: int
    duration_ms: float

    def __post_init__(self):
        if self.hop_ms <= 0 or self.frame_ms < self.hop_ms:
            raise InvalidGrid(
                f"need frame_ms >= hop_ms > 0, got hop={self.hop_ms} frame={self.frame_ms}"
            )
        if self.n_frames < 0:
            raise InvalidGrid(f"n_frames must be >= 0, got {self.n_frames}")

    def frame_starts_ms(self) -> np.ndarray:
        return np.arange(self.n_frames, dtype=np.float64) * self.hop_ms

    @property
    def duration_s(self) -> float:
        return self.duration_ms / 1000.0


@dataclass(frozen=True)
class FeatureMatrix:
    grid: FrameGrid
    n_coeffs: int
    values: np.ndarray  # (n_frames, n_coeffs)
    kind: FeatureKind

    def __post_init__(self):
        if self.values.shape != (self.grid.n_frames, self.n_coeffs):
            raise InvalidGrid(
                f"feature shape {self.values.shape} does not match "
                f"{self.grid.n_frames} frames x {self.n_coeffs} coeffs"
            )
        if self.values.size and not np.all(np.isfinite(self.values)):
            raise InvalidGrid("feature matrix contains non-finite values")


def decode_wav(path) -> AudioClip:
    """Decode a PCM WAV file (16-bit int or 32-bit IEEE float) to a mono clip.

    Multi-channel input is mixed down by arithmetic channel mean; 16-bit samples
    are scaled by 1/32768 so -32768 maps to -1.0; float samples are clipped to
    [-1, 1].

    Raises:
        UnsupportedFormat: not a RIFF/WAVE file, or a sample format other than
            16-bit PCM / 32-bit float.
        CorruptFile: truncated header or data chunk.
    """
    raw = Path(path).read_bytes()
    if len(raw) < 12:
        raise CorruptFile(f"{path}: file shorter than a RIFF header")
    if raw[0:4] != b"RIFF" or raw[8:12] != b"WAVE":
        raise UnsupportedFormat(f"{path}: not a RIFF/WAVE file")

    fmt = None
    data = None
    pos = 12
    while pos + 8 <= len(raw):
        chunk_id = raw[pos : pos + 4]
        (chunk_size,) = struct.unpack_from("<I", raw, pos + 4)
        body_start = pos + 8
        if chunk_id == b"fmt ":
            if body_start + 16 > len(raw):
                raise CorruptFile(f"{path}: truncated fmt chunk")
            fmt = struct.unpack_from("<HHIIHH", raw, body_start)
            if fmt[0] == _WAVE_FORMAT_EXTENSIBLE:
                # Resolve the real format from the first two GUID bytes.
                if body_start + 26 > len(raw):
                    raise CorruptFile(f"{path}: truncated WAVE_FORMAT_EXTENSIBLE chunk")
                (subformat,) = struct.unpack_from("<H", raw, body_start + 24)
                fmt = (subformat,) + fmt[1:]
        elif chunk_id == b"data":
            if body_start + chunk_size > len(raw):
                raise CorruptFile(
                    f"{path}: data chunk claims {chunk_size} bytes, "
                    f"only {len(raw) - body_start} present"
                )
            data = raw[body_start : body_start + chunk_size]
        pos = body_start + chunk_size + (chunk_size & 1)  # chunks are word-aligned

    if fmt is None:
        raise CorruptFile(f"{path}: missing fmt chunk")
    if data is None:
        raise CorruptFile(f"{path}: missing data chunk")

    audio_format, n_channels, sample_rate, _, _, bits = fmt
    if n_channels < 1 or sample_rate < 1:
        raise CorruptFile(f"{path}: nonsensical fmt fields")

    if audio_format == _WAVE_FORMAT_PCM and bits == 16:
        frame_bytes = 2 * n_channels
        n = len(data) // frame_bytes
        x = np.frombuffer(data[: n * frame_bytes], dtype="<i2").astype(np.float64)
        x /= 32768.0
    elif audio_format == _WAVE_FORMAT_IEEE_FLOAT and bits == 32:
        frame_bytes = 4 * n_channels
        n = len(data) // frame_bytes
        x = np.frombuffer(data[: n * frame_bytes], dtype="<f4").astype(np.float64)
        x = np.clip(x, -1.0, 1.0)
    else:
        raise UnsupportedFormat(
            f"{path}: unsupported sample format (format tag {audio_format}, {bits} bits); "
            "only 16-bit PCM and 32-bit float are accepted"
        )
    if len(data) % frame_bytes:
        raise CorruptFile(f"{path}: data chunk not a whole number of sample frames")

    if n_channels > 1:
        x = x.reshape(-1, n_channels).mean(axis=1)
    return AudioClip(samples=x, sample_rate=sample_rate, channel_count=n_channels)


def frame_signal(clip: AudioClip, hop_ms: int = 10, frame_ms: int = 25) -> FrameGrid:
    """Lay a uniform frame grid over the clip.

    n_frames = floor((duration_ms - frame_ms)/hop_ms) + 1, clamped at 0, computed
    in exact integer arithmetic so the count never drifts with float rounding.
    """
    if hop_ms <= 0 or frame_ms < hop_ms:
        raise InvalidGrid(f"need frame_ms >= hop_ms > 0, got hop={hop_ms} frame={frame_ms}")
    numer = len(clip.samples) * 1000 - frame_ms * clip.sample_rate
    n_frames = 0 if numer < 0 else numer // (hop_ms * clip.sample_rate) + 1
    return FrameGrid(
        hop_ms=hop_ms,
        frame_ms=frame_ms,
        n_frames=int(n_frames),
        duration_ms=clip.duration_ms,
    )


def _check_grid_matches(clip: AudioClip, grid: FrameGrid) -> None:
    expected = frame_signal(clip, grid.hop_ms, grid.frame_ms)
    if expected.n_frames != grid.n_frames:
        raise InvalidGrid(
            f"grid has {grid.n_frames} frames but clip yields {expected.n_frames}"
        )


def extract_frames(clip: AudioClip, grid: FrameGrid) -> np.ndarray:
    """(n_frames, frame_len) sample matrix; a final frame that overruns the clip
    due to ms-to-sample rounding is zero-padded."""
    sr = clip.sample_rate
    frame_len = round(grid.frame_ms * sr / 1000)
    if grid.n_frames == 0:
        return np.zeros((0, frame_len))
    step = grid.hop_ms * sr / 1000
    if step == int(step):
        # Integer hop in samples: strided view over the whole rows, explicit
        # zero-padding only for frames that overrun the clip.
        step = int(step)
        frames = np.zeros((grid.n_frames, frame_len))
        n_full = min(grid.n_frames, max(0, (len(clip.samples) - frame_len) // step + 1))
        if n_full > 0:
            view = np.lib.stride_tricks.sliding_window_view(clip.samples, frame_len)
            frames[:n_full] = view[: n_full * step : step]
        for i in range(n_full, grid.n_frames):
            chunk = clip.samples[i * step : i * step + frame_len]
            frames[i, : len(chunk)] = chunk
        return frames
    starts = np.rint(np.arange(grid.n_frames) * step).astype(np.int64)
    idx = starts[:, None] + np.arange(frame_len)[None, :]
    valid = idx < len(clip.samples)
    frames = clip.samples[np.minimum(idx, len(clip.samples) - 1)]
    frames[~valid] = 0.0
    return frames


def _hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def _mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


@lru_cache(maxsize=16)
def _cached_filterbank(n_mels: int, n_fft: int, sample_rate: int) -> np.ndarray:
    return _build_filterbank(n_mels, n_fft, sample_rate)


def mel_filterbank(n_mels: int, n_fft: int, sample_rate: int) -> np.ndarray:
    """(n_mels, n_fft//2 + 1) triangular filters, edges equally spaced on the mel
    scale between MEL_LOW_HZ and Nyquist."""
    return _cached_filterbank(n_mels, n_fft, sample_rate).copy()


def _build_filterbank(n_mels: int, n_fft: int, sample_rate: int) -> np.ndarray:
    edges_hz = _mel_to_hz(
        np.linspace(_hz_to_mel(MEL_LOW_HZ), _hz_to_mel(sample_rate / 2.0), n_mels + 2)
    )
    bin_hz = np.arange(n_fft // 2 + 1) * sample_rate / n_fft
    fb = np.zeros((n_mels, len(bin_hz)))
    for m in range(n_mels):
        lo, mid, hi = edges_hz[m], edges_hz[m + 1], edges_hz[m + 2]
        rising = (bin_hz - lo) / max(mid - lo, 1e-12)
        falling = (hi - bin_hz) / max(hi - mid, 1e-12)
        fb[m] = np.clip(np.minimum(rising, falling), 0.0, None)
    return fb


@lru_cache(maxsize=16)
def _dct_ii_matrix(n_out: int, n_in: int) -> np.ndarray:
    # Orthonormal DCT-II, built explicitly so the transform is pinned down.
    k = np.arange(n_out)[:, None]
    n = np.arange(n_in)[None, :]
    mat = np.cos(np.pi * k * (2 * n + 1) / (2 * n_in)) * np.sqrt(2.0 / n_in)
    mat[0] /= np.sqrt(2.0)
    mat.setflags(write=False)
    return mat


def compute_features(
    clip: AudioClip, grid: FrameGrid, kind: FeatureKind, n_coeffs: int = N_MELS
) -> FeatureMatrix:
    """Per-frame features on the grid.

    LOG_ENERGY: natural log of the frame mean square (+ SILENCE_EPS), one coefficient,
    no window. LOG_MEL: Hann window, power spectrum at the next power-of-two FFT size,
    triangular mel filters, natural log. MFCC: orthonormal DCT-II of a 40-band log-mel
    spectrum, first n_coeffs coefficients. Deterministic: identical inputs give
    bit-identical matrices.
    """
    if not isinstance(kind, FeatureKind):
        raise InvalidGrid(f"unknown feature kind {kind!r}")
    if kind is FeatureKind.LOG_ENERGY:
        n_coeffs = 1
    if n_coeffs < 1:
        raise InvalidGrid(f"n_coeffs must be >= 1, got {n_coeffs}")
    _check_grid_matches(clip, grid)

    frames = extract_frames(clip, grid)
    if kind is FeatureKind.LOG_ENERGY:
        energy = np.mean(frames * frames, axis=1) if frames.size else np.zeros(len(frames))
        values = np.log(energy + SILENCE_EPS)[:, None]
        return FeatureMatrix(grid=grid, n_coeffs=1, values=values, kind=kind)

    frame_len = frames.shape[1]
    n_fft = 1 << max(frame_len - 1, 1).bit_length()
    window = np.hanning(frame_len)
    spectrum = np.abs(np.fft.rfft(frames * window, n=n_fft, axis=1)) ** 2
    n_mels = N_MELS if kind is FeatureKind.MFCC else n_coeffs
    fb = mel_filterbank(n_mels, n_fft, clip.sample_rate)
    log_mel = np.log(spectrum @ fb.T + SILENCE_EPS)
    if kind is FeatureKind.LOG_MEL:
        return FeatureMatrix(grid=grid, n_coeffs=n_coeffs, values=log_mel, kind=kind)
    mfcc = log_mel @ _dct_ii_matrix(n_coeffs, n_mels).T
    return FeatureMatrix(grid=grid, n_coeffs=n_coeffs, values=mfcc, kind=kind)

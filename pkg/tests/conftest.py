import struct
import sys
import wave
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from msvad.audio_io import FrameGrid
from msvad.vad_bank import FrameProbStream


def write_wav_int16(path, samples, sample_rate=16000, channels=1):
    """samples: (n,) mono or (n, channels) float in [-1, 1]."""
    arr = np.asarray(samples, dtype=np.float64)
    pcm = np.rint(np.clip(arr, -1.0, 1.0) * 32767.0).astype("<i2")
    with wave.open(str(path), "wb") as fh:
        fh.setnchannels(channels)
        fh.setsampwidth(2)
        fh.setframerate(sample_rate)
        fh.writeframes(pcm.tobytes())
    return path


def write_wav_float32(path, samples, sample_rate=16000, channels=1):
    arr = np.asarray(samples, dtype="<f4")
    data = arr.tobytes()
    byte_rate = sample_rate * channels * 4
    header = b"RIFF" + struct.pack("<I", 36 + len(data)) + b"WAVE"
    fmt = b"fmt " + struct.pack("<IHHIIHH", 16, 3, channels, sample_rate, byte_rate, channels * 4, 32)
    payload = b"data" + struct.pack("<I", len(data)) + data
    Path(path).write_bytes(header + fmt + payload)
    return path


def grid_for_windows(n_windows, hop_ms=10, frame_ms=25, window_ms=250, partial_frames=0):
    """A FrameGrid holding n_windows fusion windows (final one short by
    partial_frames frames)."""
    fpw = window_ms // hop_ms
    n_frames = n_windows * fpw - partial_frames
    duration_ms = frame_ms + hop_ms * (n_frames - 1) + hop_ms / 2.0
    return FrameGrid(hop_ms=hop_ms, frame_ms=frame_ms, n_frames=n_frames, duration_ms=duration_ms)


def make_stream(source_id, probs, grid=None, hop_ms=10, frame_ms=25):
    probs = np.asarray(probs, dtype=np.float64)
    if grid is None:
        duration_ms = frame_ms + hop_ms * (len(probs) - 1) + hop_ms / 2.0
        grid = FrameGrid(hop_ms=hop_ms, frame_ms=frame_ms, n_frames=len(probs), duration_ms=duration_ms)
    return FrameProbStream(source_id=source_id, grid=grid, probs=probs)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)


def random_bank(rng, window_ms=250):
    """Random VadBank shaped like the acceptance suite demands: 2-3 sources,
    10-40 windows, mixed hops; occasionally extreme or constant streams."""
    from msvad.vad_bank import VadBank

    hop = int(rng.choice([10, 25, 50]))
    fpw = window_ms // hop
    n_windows = int(rng.integers(10, 41))
    partial = int(rng.integers(0, fpw))
    n_frames = n_windows * fpw - partial
    n_sources = int(rng.integers(2, 4))
    grid = grid_for_windows(n_windows, hop_ms=hop, frame_ms=hop + 15, partial_frames=partial)
    streams = []
    for s in range(n_sources):
        style = rng.random()
        if style < 0.1:
            probs = np.full(n_frames, float(rng.choice([0.0, 1.0, 0.5])))
        elif style < 0.3:
            probs = np.round(rng.random(n_frames))  # fully confident everywhere
        else:
            probs = rng.random(n_frames)
        streams.append(make_stream(f"src{s}", probs, grid=grid))
    return VadBank(streams=tuple(streams))

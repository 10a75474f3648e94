"""Model loading and inference for the adapter.

A model is a local TorchScript file (anything torch.jit.load accepts):

  VAD:       forward(x: float32 [batch, window_samples]) -> [batch] or [batch, 1]
             scores; outputs outside [0, 1] are treated as logits and passed
             through a sigmoid.
  Embedding: forward(x: float32 [1, n_samples]) -> [1, D].

Inference runs on CPU with deterministic kernels enforced so identical inputs
produce identical files.
"""

from __future__ import annotations

import wave
from pathlib import Path

import numpy as np
import torch


class ModelLoadError(Exception):
    pass


def _setup_determinism() -> None:
    torch.manual_seed(0)
    torch.use_deterministic_algorithms(True)
    torch.set_num_threads(1)


def load_model(name_or_path: str):
    """TorchScript (.pt) or torch.export (.pt2) module from a local file."""
    path = Path(name_or_path)
    if not path.exists():
        raise ModelLoadError(f"model not found: {name_or_path}")
    _setup_determinism()
    try:
        if path.suffix == ".pt2":
            model = torch.export.load(str(path)).module()
        else:
            import warnings

            with warnings.catch_warnings():
                warnings.simplefilter("ignore", DeprecationWarning)
                model = torch.jit.load(str(path), map_location="cpu")
            model.eval()
    except ModelLoadError:
        raise
    except Exception as exc:
        raise ModelLoadError(f"cannot load model {name_or_path}: {exc}") from exc
    return model


def read_wav_mono(path) -> tuple[np.ndarray, int]:
    """16-bit PCM WAV to mono float32 in [-1, 1]."""
    try:
        with wave.open(str(path), "rb") as fh:
            n_channels = fh.getnchannels()
            width = fh.getsampwidth()
            rate = fh.getframerate()
            frames = fh.readframes(fh.getnframes())
    except (OSError, wave.Error, EOFError) as exc:
        raise ModelLoadError(f"cannot read WAV {path}: {exc}") from exc
    if width != 2:
        raise ModelLoadError(f"{path}: only 16-bit PCM WAV is supported, got {8 * width}-bit")
    x = np.frombuffer(frames, dtype="<i2").astype(np.float32) / 32768.0
    if n_channels > 1:
        x = x.reshape(-1, n_channels).mean(axis=1)
    return x, rate


# Context fed to the VAD model per hop: the window is centered on the frame
# start and zero-padded at the clip edges.
VAD_CONTEXT_MS = 300
_BATCH = 256


def run_vad(model, samples: np.ndarray, sample_rate: int, hop_ms: int) -> np.ndarray:
    hop = max(1, round(hop_ms * sample_rate / 1000))
    context = max(hop, round(VAD_CONTEXT_MS * sample_rate / 1000))
    n_frames = max(1, int(np.ceil(len(samples) / hop)))
    half = context // 2
    padded = np.pad(samples.astype(np.float32), (half, context))
    probs = np.empty(n_frames, dtype=np.float64)
    with torch.no_grad():
        for lo in range(0, n_frames, _BATCH):
            hi = min(lo + _BATCH, n_frames)
            windows = np.stack(
                [padded[i * hop : i * hop + context] for i in range(lo, hi)]
            )
            out = model(torch.from_numpy(windows))
            out = out.reshape(-1).to(torch.float64).cpu().numpy()
            if out.size and (out.min() < 0.0 or out.max() > 1.0):
                out = 1.0 / (1.0 + np.exp(-out))
            probs[lo:hi] = out
    return np.clip(probs, 0.0, 1.0)


def run_embeddings(model, samples: np.ndarray, sample_rate: int, segments) -> list:
    """segments: list of (start_s, end_s). Returns (start_s, end_s, vector) rows."""
    rows = []
    with torch.no_grad():
        for start_s, end_s in segments:
            lo = max(0, round(start_s * sample_rate))
            hi = min(len(samples), round(end_s * sample_rate))
            if hi <= lo:
                continue
            x = torch.from_numpy(samples[lo:hi].astype(np.float32))[None, :]
            vec = model(x).reshape(-1).to(torch.float64).cpu().numpy()
            rows.append((start_s, end_s, vec))
    return rows

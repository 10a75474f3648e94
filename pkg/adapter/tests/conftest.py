import sys
import wave
from pathlib import Path

import numpy as np
import pytest
import torch

sys.path.insert(0, str(Path(__file__).parent))

FIXTURES = Path(__file__).parent / "fixtures"


class TinyEnergyVad(torch.nn.Module):
    """[B, N] waveform window -> [B] speech score (logit around an energy knee)."""

    def forward(self, x):
        energy = (x * x).mean(dim=1)
        return 400.0 * (energy - 0.01)


class TinyBinStats(torch.nn.Module):
    """[1, N] waveform -> [1, 8] per-bin RMS embedding."""

    def __init__(self, dim: int = 8):
        super().__init__()
        self.dim = dim

    def forward(self, x):
        n = x.shape[1] - x.shape[1] % self.dim
        y = x[:, :n].reshape(x.shape[0], self.dim, -1)
        return torch.sqrt((y * y).mean(dim=2) + 1e-6)


def save_vad_model(path) -> Path:
    torch.jit.script(TinyEnergyVad()).save(str(path))
    return Path(path)


def save_embedding_model(path) -> Path:
    torch.jit.script(TinyBinStats()).save(str(path))
    return Path(path)


def tone_and_silence_wav(path, sample_rate=16000):
    """1 s silence, 2 s of 220 Hz tone, 1 s silence."""
    t = np.arange(2 * sample_rate) / sample_rate
    tone = 0.4 * np.sin(2 * np.pi * 220 * t)
    sig = np.concatenate([np.zeros(sample_rate), tone, np.zeros(sample_rate)])
    pcm = np.rint(np.clip(sig, -1, 1) * 32767).astype("<i2")
    with wave.open(str(path), "wb") as fh:
        fh.setnchannels(1)
        fh.setsampwidth(2)
        fh.setframerate(sample_rate)
        fh.writeframes(pcm.tobytes())
    return Path(path)


@pytest.fixture()
def vad_model(tmp_path):
    return save_vad_model(tmp_path / "vad.pt")


@pytest.fixture()
def embedding_model(tmp_path):
    return save_embedding_model(tmp_path / "emb.pt")


@pytest.fixture()
def wav_file(tmp_path):
    return tone_and_silence_wav(tmp_path / "tone.wav")

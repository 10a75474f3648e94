"""Adapter jobs: run a model over a WAV and atomically write a wire-format file.

Outputs are written to a temp file in the destination directory and renamed into
place only after re-parsing succeeds, so the primary pipeline never sees a
partial or non-conformant stream.
"""

from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

from . import models, wire

EXIT_OK = 0
EXIT_MODEL_FAILURE = 1
EXIT_VALIDATION_FAILURE = 3


@dataclass(frozen=True)
class AdapterJob:
    wav_path: str
    model_kind: str  # "vad" | "embedding"
    model_name: str
    out_path: str
    hop_ms: int = 10
    win_s: float = 1.5
    step_s: float = 0.75
    segments_path: str | None = None  # RTTM; None -> full-file sliding windows
    source_id: str | None = None

    def __post_init__(self):
        if self.model_kind not in ("vad", "embedding"):
            raise ValueError(f"unknown model_kind {self.model_kind!r}")
        if self.hop_ms <= 0:
            raise ValueError("hop_ms must be positive")
        if not (0.0 < self.step_s <= self.win_s):
            raise ValueError("need win_s >= step_s > 0")


def _atomic_write(out_path: str, text: str, kind: str) -> int:
    out = Path(out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=out.name + ".", dir=out.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        try:
            wire.validate_file(tmp_name, kind)
        except wire.WireValidationError as exc:
            print(f"self-validation failed: {exc}")
            return EXIT_VALIDATION_FAILURE
        os.replace(tmp_name, out)
        return EXIT_OK
    finally:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)


def _read_rttm_spans(path) -> list[tuple[float, float]]:
    spans = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        parts = line.split()
        if not parts or parts[0] != "SPEAKER":
            continue
        start, dur = float(parts[3]), float(parts[4])
        spans.append((start, start + dur))
    return sorted(spans)


def _sliding_spans(duration_s: float, win_s: float, step_s: float) -> list[tuple[float, float]]:
    spans = []
    start = 0.0
    while start + win_s <= duration_s + 1e-9:
        spans.append((start, start + win_s))
        start += step_s
    if not spans and duration_s > 0:
        spans.append((0.0, duration_s))
    return spans


def run_vad_job(job: AdapterJob) -> int:
    try:
        model = models.load_model(job.model_name)
        samples, rate = models.read_wav_mono(job.wav_path)
    except models.ModelLoadError as exc:
        print(f"error: {exc}")
        return EXIT_MODEL_FAILURE
    probs = models.run_vad(model, samples, rate, job.hop_ms)
    source = job.source_id or Path(job.model_name).stem
    text = wire.format_probs(job.hop_ms, source, probs)
    return _atomic_write(job.out_path, text, "probs")


def run_embedding_job(job: AdapterJob) -> int:
    try:
        model = models.load_model(job.model_name)
        samples, rate = models.read_wav_mono(job.wav_path)
    except models.ModelLoadError as exc:
        print(f"error: {exc}")
        return EXIT_MODEL_FAILURE
    if job.segments_path:
        spans = _read_rttm_spans(job.segments_path)
    else:
        spans = _sliding_spans(len(samples) / rate, job.win_s, job.step_s)
    rows = models.run_embeddings(model, samples, rate, spans)
    text = wire.format_embs(rows)
    return _atomic_write(job.out_path, text, "embs")

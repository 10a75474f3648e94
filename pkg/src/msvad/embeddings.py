"""Fixed-dimension subsegment vectors for clustering.

The built-in embedder summarizes 20 MFCCs by their mean and standard deviation
(D = 40) and unit-normalizes; neural embeddings enter via the msvad-embs wire
format:

    #msvad-embs v1 dim=<D>
    start_s,end_s,v1,...,vD
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .audio_io import AudioClip, FeatureKind, compute_features, frame_signal
from .errors import DimensionMismatch, FormatError, NumericalFailure, SpanOutOfRange
from .segments import LabeledSegmentation

BUILTIN_N_MFCC = 20
_TOL = 1e-9


class EmbeddingSource(Enum):
    BUILTIN = "builtin"
    EXTERNAL = "external"


@dataclass(frozen=True)
class SegmentEmbedding:
    span: tuple[float, float]
    vector: np.ndarray  # unit L2 norm
    source: EmbeddingSource

    def __post_init__(self):
        if not (self.span[0] < self.span[1]):
            raise ValueError(f"span start {self.span[0]} must precede end {self.span[1]}")

    @property
    def duration_s(self) -> float:
        return self.span[1] - self.span[0]


def subsegment(segments, win_s: float = 1.5, step_s: float = 0.75):
    """Sliding spans inside each speech segment.

    Regular starts advance by step_s while a full window fits; if those leave an
    uncovered tail, one final window ending exactly at the segment end is added.
    A segment shorter than win_s yields a single span equal to itself.
    """
    if not (0.0 < step_s <= win_s):
        raise ValueError(f"need win_s >= step_s > 0, got win={win_s} step={step_s}")
    spans: list[tuple[float, float]] = []
    source = segments.spans() if isinstance(segments, LabeledSegmentation) else segments
    for start, end in source:
        if end - start <= win_s + _TOL:
            spans.append((start, end))
            continue
        k = 0
        last_end = start
        while start + k * step_s + win_s <= end + _TOL:
            s = start + k * step_s
            spans.append((s, s + win_s))
            last_end = s + win_s
            k += 1
        if last_end < end - _TOL:
            spans.append((end - win_s, end))
    return spans


def embed_builtin(
    clip: AudioClip,
    span: tuple[float, float],
    *,
    hop_ms: int = 10,
    frame_ms: int = 25,
) -> SegmentEmbedding:
    """Mean and standard deviation of 20 MFCCs over the span, unit-normalized."""
    start_s, end_s = span
    if start_s < -_TOL or end_s > clip.duration_seconds + _TOL or end_s <= start_s:
        raise SpanOutOfRange(
            f"span [{start_s}, {end_s}) outside clip of {clip.duration_seconds:.3f} s"
        )
    sr = clip.sample_rate
    lo = max(0, round(start_s * sr))
    hi = min(len(clip.samples), round(end_s * sr))
    samples = clip.samples[lo:hi]
    min_len = round(frame_ms * sr / 1000)
    if len(samples) < min_len:  # spans shorter than one frame are zero-padded up
        samples = np.pad(samples, (0, min_len - len(samples)))
    sub = AudioClip(samples=samples, sample_rate=sr, channel_count=clip.channel_count)
    grid = frame_signal(sub, hop_ms, frame_ms)
    feats = compute_features(sub, grid, FeatureKind.MFCC, BUILTIN_N_MFCC)
    vector = np.concatenate([feats.values.mean(axis=0), feats.values.std(axis=0)])
    norm = float(np.linalg.norm(vector))
    if norm <= 0.0 or not np.isfinite(norm):
        raise NumericalFailure(f"degenerate embedding for span [{start_s}, {end_s})")
    return SegmentEmbedding(span=span, vector=vector / norm, source=EmbeddingSource.BUILTIN)


def embed_spans(
    clip: AudioClip, spans, *, hop_ms: int = 10, frame_ms: int = 25
) -> list[SegmentEmbedding]:
    """Batch form of embed_builtin.

    Spans whose start falls on the clip-wide frame grid reuse one clip-wide MFCC
    matrix (bit-identical to the per-span path, which sees the same sample rows);
    anything unaligned falls back to embed_builtin.
    """
    spans = list(spans)
    if not spans:
        return []
    sr = clip.sample_rate
    step = hop_ms * sr / 1000
    if step != int(step):
        return [embed_builtin(clip, s, hop_ms=hop_ms, frame_ms=frame_ms) for s in spans]
    step = int(step)
    grid = frame_signal(clip, hop_ms, frame_ms)
    feats = None
    out = []
    for span in spans:
        lo = round(span[0] * sr)
        hi = min(len(clip.samples), round(span[1] * sr))
        numer = (hi - lo) * 1000 - frame_ms * sr
        n_sub = 0 if numer < 0 else numer // (hop_ms * sr) + 1
        first = lo // step
        if lo < 0 or lo % step or n_sub < 1 or first + n_sub > grid.n_frames:
            out.append(embed_builtin(clip, span, hop_ms=hop_ms, frame_ms=frame_ms))
            continue
        if feats is None:
            feats = compute_features(clip, grid, FeatureKind.MFCC, BUILTIN_N_MFCC)
        rows = feats.values[first : first + n_sub]
        vector = np.concatenate([rows.mean(axis=0), rows.std(axis=0)])
        norm = float(np.linalg.norm(vector))
        if norm <= 0.0 or not np.isfinite(norm):
            raise NumericalFailure(f"degenerate embedding for span {span}")
        out.append(
            SegmentEmbedding(span=span, vector=vector / norm, source=EmbeddingSource.BUILTIN)
        )
    return out


_HEADER_RE = re.compile(r"^#msvad-embs v1 dim=(\d+)\s*$")


def load_embeddings(path) -> list[SegmentEmbedding]:
    """Read an msvad-embs file; vectors are unit-normalized on load."""
    lines = Path(path).read_text(encoding="utf-8").split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise FormatError(f"{path}: empty file")
    m = _HEADER_RE.match(lines[0])
    if not m:
        raise FormatError(f"{path}: bad header {lines[0]!r}")
    dim = int(m.group(1))
    if dim < 1:
        raise FormatError(f"{path}: dim must be >= 1")

    embeddings = []
    for lineno, line in enumerate(lines[1:], 2):
        parts = line.split(",")
        if len(parts) - 2 != dim:
            raise DimensionMismatch(
                f"{path}:{lineno}: row has {len(parts) - 2} components, header says {dim}"
            )
        try:
            values = np.array([float(p) for p in parts], dtype=np.float64)
        except ValueError:
            raise FormatError(f"{path}:{lineno}: non-numeric field") from None
        if not np.all(np.isfinite(values)):
            raise FormatError(f"{path}:{lineno}: non-finite value")
        start_s, end_s = values[0], values[1]
        if end_s <= start_s:
            raise FormatError(f"{path}:{lineno}: span end must exceed start")
        vec = values[2:]
        norm = float(np.linalg.norm(vec))
        if norm <= 0.0:
            raise FormatError(f"{path}:{lineno}: zero vector cannot be normalized")
        embeddings.append(
            SegmentEmbedding(
                span=(float(start_s), float(end_s)),
                vector=vec / norm,
                source=EmbeddingSource.EXTERNAL,
            )
        )
    return embeddings


def write_embeddings(embeddings, path) -> None:
    """Serialize embeddings in the msvad-embs wire format."""
    if not embeddings:
        raise ValueError("nothing to write")
    dim = len(embeddings[0].vector)
    lines = [f"#msvad-embs v1 dim={dim}"]
    for e in embeddings:
        if len(e.vector) != dim:
            raise DimensionMismatch("embeddings have mixed dimensionality")
        parts = [format(e.span[0], ".3f"), format(e.span[1], ".3f")]
        parts.extend(format(v, ".8g") for v in e.vector)
        lines.append(",".join(parts))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")

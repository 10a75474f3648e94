"""Time segmentations with optional speaker labels, plus RTTM and JSON forms.

This is the unit exchanged between fusion (unlabeled), clustering (labeled),
metrics, and the synthetic corpus ground truth.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

from .errors import FormatError

_TOL = 1e-9


@dataclass(frozen=True)
class Segment:
    start_s: float
    end_s: float
    label: str | None = None

    def __post_init__(self):
        if not (self.start_s < self.end_s):
            raise ValueError(f"segment start {self.start_s} must precede end {self.end_s}")

    @property
    def duration_s(self) -> float:
        return self.end_s - self.start_s


@dataclass(frozen=True)
class LabeledSegmentation:
    recording_id: str
    segments: tuple[Segment, ...]
    total_duration_s: float

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))
        prev_start = -1.0
        last_end_by_label: dict[str | None, float] = {}
        for seg in self.segments:
            if seg.start_s < -_TOL or seg.end_s > self.total_duration_s + _TOL:
                raise ValueError(
                    f"{self.recording_id}: segment [{seg.start_s}, {seg.end_s}) outside "
                    f"[0, {self.total_duration_s}]"
                )
            if seg.start_s < prev_start - _TOL:
                raise ValueError(f"{self.recording_id}: segments not sorted by start")
            prev_start = seg.start_s
            if seg.label in last_end_by_label and seg.start_s < last_end_by_label[seg.label] - _TOL:
                raise ValueError(
                    f"{self.recording_id}: overlapping segments for label {seg.label!r}"
                )
            last_end_by_label[seg.label] = max(last_end_by_label.get(seg.label, 0.0), seg.end_s)

    @property
    def labels(self) -> tuple[str, ...]:
        seen: list[str] = []
        for seg in self.segments:
            if seg.label is not None and seg.label not in seen:
                seen.append(seg.label)
        return tuple(seen)

    @property
    def speech_duration_s(self) -> float:
        return sum(seg.duration_s for seg in self.segments)

    def spans(self) -> list[tuple[float, float]]:
        return [(seg.start_s, seg.end_s) for seg in self.segments]

    def relabeled(self, mapping: dict[str | None, str | None]) -> "LabeledSegmentation":
        segs = sorted(
            (replace(s, label=mapping.get(s.label, s.label)) for s in self.segments),
            key=lambda s: (s.start_s, s.end_s, s.label or ""),
        )
        return LabeledSegmentation(self.recording_id, tuple(segs), self.total_duration_s)


def merge_contiguous(segments, tol: float = _TOL):
    """Collapse touching or overlapping same-label segments; input must be sorted."""
    merged: list[Segment] = []
    for seg in segments:
        if merged and merged[-1].label == seg.label and seg.start_s <= merged[-1].end_s + tol:
            merged[-1] = replace(merged[-1], end_s=max(merged[-1].end_s, seg.end_s))
        else:
            merged.append(seg)
    return merged


def to_rttm(seg: LabeledSegmentation, default_label: str = "speech") -> str:
    lines = []
    for s in seg.segments:
        label = s.label if s.label is not None else default_label
        lines.append(
            f"SPEAKER {seg.recording_id} 1 {s.start_s:.3f} {s.duration_s:.3f} "
            f"<NA> <NA> {label} <NA> <NA>"
        )
    return "\n".join(lines) + ("\n" if lines else "")


def write_rttm(seg: LabeledSegmentation, path) -> None:
    Path(path).write_text(to_rttm(seg), encoding="utf-8", newline="\n")


def from_rttm(path, total_duration_s: float | None = None) -> LabeledSegmentation:
    """Parse SPEAKER records. Labels are kept verbatim (the unlabeled fusion output
    uses the placeholder 'speech')."""
    recording_id = None
    segments = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        parts = line.split()
        if parts[0] != "SPEAKER":
            raise FormatError(f"{path}:{lineno}: expected SPEAKER record, got {parts[0]!r}")
        if len(parts) < 8:
            raise FormatError(f"{path}:{lineno}: too few fields")
        recording_id = recording_id or parts[1]
        try:
            start = float(parts[3])
            dur = float(parts[4])
        except ValueError:
            raise FormatError(f"{path}:{lineno}: non-numeric onset/duration") from None
        segments.append(Segment(start_s=start, end_s=start + dur, label=parts[7]))
    segments.sort(key=lambda s: (s.start_s, s.end_s, s.label or ""))
    if total_duration_s is None:
        total_duration_s = max((s.end_s for s in segments), default=0.0)
    return LabeledSegmentation(
        recording_id=recording_id or Path(path).stem,
        segments=tuple(segments),
        total_duration_s=total_duration_s,
    )


def to_json_obj(seg: LabeledSegmentation) -> dict:
    return {
        "recording_id": seg.recording_id,
        "total_duration_s": seg.total_duration_s,
        "segments": [
            {"start_s": s.start_s, "end_s": s.end_s, "label": s.label} for s in seg.segments
        ],
    }

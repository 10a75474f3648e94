"""Writers and self-validation for the msvad wire formats.

The adapter never imports the primary package; these validators re-parse emitted
files against the published format rules before a job exits, so a conformance
bug fails the job (exit 3) instead of poisoning a downstream run.
"""

from __future__ import annotations

import math
import re
from pathlib import Path

PROBS_HEADER_RE = re.compile(r"^#msvad-probs v1 hop_ms=(\d+) source=(\S+)$")
EMBS_HEADER_RE = re.compile(r"^#msvad-embs v1 dim=(\d+)$")


class WireValidationError(Exception):
    pass


def format_probs(hop_ms: int, source: str, probs) -> str:
    lines = [f"#msvad-probs v1 hop_ms={hop_ms} source={source}"]
    lines.extend(format(min(max(float(p), 0.0), 1.0), ".6f") for p in probs)
    return "\n".join(lines) + "\n"


def format_embs(rows) -> str:
    """rows: iterable of (start_s, end_s, vector)."""
    rows = list(rows)
    dim = len(rows[0][2]) if rows else 0
    lines = [f"#msvad-embs v1 dim={dim}"]
    for start_s, end_s, vec in rows:
        if len(vec) != dim:
            raise WireValidationError("embedding rows have mixed dimensionality")
        parts = [format(float(start_s), ".3f"), format(float(end_s), ".3f")]
        parts.extend(format(float(v), ".8g") for v in vec)
        lines.append(",".join(parts))
    return "\n".join(lines) + "\n"


def validate_probs_text(text: str) -> int:
    """Returns the number of probability lines; raises on any conformance hole."""
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines or not PROBS_HEADER_RE.match(lines[0]):
        raise WireValidationError(f"bad probs header: {lines[0][:80] if lines else '<empty>'!r}")
    for i, line in enumerate(lines[1:], 2):
        try:
            v = float(line)
        except ValueError:
            raise WireValidationError(f"line {i}: not a number") from None
        if not math.isfinite(v) or not (0.0 <= v <= 1.0):
            raise WireValidationError(f"line {i}: probability {v} outside [0, 1]")
    return len(lines) - 1


def validate_embs_text(text: str) -> int:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    m = EMBS_HEADER_RE.match(lines[0]) if lines else None
    if not m:
        raise WireValidationError(f"bad embs header: {lines[0][:80] if lines else '<empty>'!r}")
    dim = int(m.group(1))
    for i, line in enumerate(lines[1:], 2):
        parts = line.split(",")
        if len(parts) != dim + 2:
            raise WireValidationError(f"line {i}: {len(parts) - 2} components, header says {dim}")
        try:
            values = [float(p) for p in parts]
        except ValueError:
            raise WireValidationError(f"line {i}: non-numeric field") from None
        if not all(math.isfinite(v) for v in values):
            raise WireValidationError(f"line {i}: non-finite value")
        if values[1] <= values[0]:
            raise WireValidationError(f"line {i}: span end must exceed start")
        if all(v == 0.0 for v in values[2:]):
            raise WireValidationError(f"line {i}: zero vector")
    return len(lines) - 1


def validate_file(path, kind: str) -> int:
    text = Path(path).read_text(encoding="utf-8")
    return validate_probs_text(text) if kind == "probs" else validate_embs_text(text)

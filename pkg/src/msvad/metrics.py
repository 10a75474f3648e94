"""Speaker-count scoring: correct-count rate with 99% intervals, mean absolute
count distance, and the Diarization Fairness Rate over single-speaker sets."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

from .errors import EmptyInput, NotSingleSpeakerSet

# 99% two-sided normal quantile as used in the interval formulas.
Z99 = 2.576


@dataclass(frozen=True)
class Interval:
    low: float
    high: float
    method: str  # "wald" | "wilson"


@dataclass(frozen=True)
class CountReport:
    n: int
    correct_rate: float
    ci99: Interval  # Wald, clamped to [0, 1]
    ci99_wilson: Interval
    mean_abs_count_error: float
    dfr: float | None  # only when a single-speaker subset was evaluated
    per_true_count_breakdown: dict[int, float]

    def to_json_obj(self) -> dict:
        obj = {
            "n": self.n,
            "correct_rate": self.correct_rate,
            "ci99_wald": {"low": self.ci99.low, "high": self.ci99.high},
            "ci99_wilson": {"low": self.ci99_wilson.low, "high": self.ci99_wilson.high},
            "mean_abs_count_error": self.mean_abs_count_error,
            "per_true_count_breakdown": {
                str(k): v for k, v in sorted(self.per_true_count_breakdown.items())
            },
        }
        if self.dfr is not None:
            obj["dfr"] = self.dfr
        return obj


def _check_pairs(pairs):
    pairs = [(int(e), int(t)) for e, t in pairs]
    if not pairs:
        raise EmptyInput("need at least one (estimated, true) pair")
    return pairs


def wald_interval(rate: float, n: int) -> Interval:
    half = Z99 * math.sqrt(rate * (1.0 - rate) / n)
    return Interval(low=max(0.0, rate - half), high=min(1.0, rate + half), method="wald")


def wilson_interval(rate: float, n: int) -> Interval:
    z2 = Z99 * Z99
    denom = 1.0 + z2 / n
    center = (rate + z2 / (2.0 * n)) / denom
    half = Z99 * math.sqrt(rate * (1.0 - rate) / n + z2 / (4.0 * n * n)) / denom
    return Interval(low=center - half, high=center + half, method="wilson")


def correct_count_rate(pairs) -> tuple[float, Interval, Interval]:
    """Fraction of recordings whose estimated count equals the truth, with 99%
    Wald (clamped) and Wilson intervals."""
    pairs = _check_pairs(pairs)
    n = len(pairs)
    rate = sum(1 for est, true in pairs if est == true) / n
    return rate, wald_interval(rate, n), wilson_interval(rate, n)


def mean_abs_count_error(pairs) -> float:
    """Mean |estimated - true| in units of speakers."""
    pairs = _check_pairs(pairs)
    return sum(abs(est - true) for est, true in pairs) / len(pairs)


def diarization_fairness_rate(pairs) -> float:
    """Fraction of single-speaker recordings detected as exactly one speaker."""
    pairs = _check_pairs(pairs)
    bad = [t for _, t in pairs if t != 1]
    if bad:
        raise NotSingleSpeakerSet(f"true counts other than 1 present: {sorted(set(bad))}")
    return sum(1 for est, _ in pairs if est == 1) / len(pairs)


def breakdown_by_true_count(pairs) -> dict[int, float]:
    """Correct rate among recordings sharing each true count."""
    pairs = _check_pairs(pairs)
    totals: dict[int, int] = {}
    hits: dict[int, int] = {}
    for est, true in pairs:
        totals[true] = totals.get(true, 0) + 1
        hits[true] = hits.get(true, 0) + (1 if est == true else 0)
    return {k: hits[k] / totals[k] for k in sorted(totals)}


def evaluate(pairs, dfr_subset: bool = False) -> CountReport:
    """Assemble the full report; with dfr_subset=True the DFR is computed over
    the recordings whose true count is 1 (None when there are none)."""
    pairs = _check_pairs(pairs)
    rate, wald, wilson = correct_count_rate(pairs)
    dfr = None
    if dfr_subset:
        singles = [(est, true) for est, true in pairs if true == 1]
        if singles:
            dfr = diarization_fairness_rate(singles)
    return CountReport(
        n=len(pairs),
        correct_rate=rate,
        ci99=wald,
        ci99_wilson=wilson,
        mean_abs_count_error=mean_abs_count_error(pairs),
        dfr=dfr,
        per_true_count_breakdown=breakdown_by_true_count(pairs),
    )


def report_markdown(report: CountReport, system_name: str = "this pipeline") -> str:
    """Three tables mirroring the count-accuracy / count-distance / fairness layout."""
    pct = lambda v: f"{100.0 * v:.1f}"
    half = (report.ci99.high - report.ci99.low) / 2.0
    lines = [
        "### Correctly labeled recordings (99% CI)",
        "",
        "| Method | Percentage of correctly labeled recordings |",
        "| --- | --- |",
        f"| {system_name} | ({pct(report.correct_rate)} ± {100.0 * half:.1f}) % |",
        "",
        f"Wilson 99% interval: [{pct(report.ci99_wilson.low)} %, {pct(report.ci99_wilson.high)} %]",
        "",
        "### Distance to the true number of active speakers",
        "",
        "| Method | Relative distance with ground truth labels |",
        "| --- | --- |",
        f"| {system_name} | {report.mean_abs_count_error:.2f} speakers |",
        "",
    ]
    if report.dfr is not None:
        lines += [
            "### Fairness on single-speaker recordings",
            "",
            "| Method | Diarization Fairness Rate |",
            "| --- | --- |",
            f"| {system_name} | {pct(report.dfr)} % |",
            "",
        ]
    lines += [
        "### Correct rate by true speaker count",
        "",
        "| True speakers | Correct rate |",
        "| --- | --- |",
    ]
    for k, v in sorted(report.per_true_count_breakdown.items()):
        lines.append(f"| {k} | {pct(v)} % |")
    lines.append("")
    return "\n".join(lines)


def write_breakdown_csv(report: CountReport, path) -> None:
    """Plot-ready per-true-count rates."""
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["true_speaker_count", "correct_rate"])
        for k, v in sorted(report.per_true_count_breakdown.items()):
            writer.writerow([k, format(v, ".6f")])

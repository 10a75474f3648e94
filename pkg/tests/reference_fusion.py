"""Brute-force fusion reference, coded independently of msvad.fusion.

Plain Python loops and math.log2 throughout: per-frame entropies, window means,
per-source scaling to mean 0.5, argmin with first-wins ties, window merge.
"""

import math


def entropy_bits(p: float) -> float:
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p)


def reference_fuse(probs_by_source, hop_ms, window_ms, duration_s, threshold=0.5):
    """probs_by_source: ordered list of (source_id, list of frame probabilities).

    Returns (chosen source ids, speech verdicts, speech segments, normalized
    entropy table {source_id: [per-window]}).
    """
    fpw = window_ms // hop_ms
    n_frames = len(probs_by_source[0][1])
    n_windows = (n_frames + fpw - 1) // fpw

    raw = {}
    means = {}
    for sid, probs in probs_by_source:
        r, m = [], []
        for w in range(n_windows):
            chunk = probs[w * fpw : (w + 1) * fpw]
            acc_h = 0.0
            acc_p = 0.0
            for p in chunk:
                acc_h += entropy_bits(p)
                acc_p += p
            r.append(acc_h / len(chunk))
            m.append(acc_p / len(chunk))
        raw[sid] = r
        means[sid] = m

    scales = {}
    for sid, r in raw.items():
        mean_raw = sum(r) / len(r)
        scales[sid] = 1.0 if mean_raw <= 0.0 else 0.5 / mean_raw

    normalized = {sid: [v * scales[sid] for v in raw[sid]] for sid in raw}

    order = [sid for sid, _ in probs_by_source]
    chosen = []
    speech = []
    for w in range(n_windows):
        best_sid = None
        best = None
        for sid in order:
            v = normalized[sid][w]
            if best is None or v < best:
                best = v
                best_sid = sid
        chosen.append(best_sid)
        speech.append(means[best_sid][w] >= threshold)

    win_s = window_ms / 1000.0
    segments = []
    w = 0
    while w < n_windows:
        if speech[w]:
            start = w
            while w + 1 < n_windows and speech[w + 1]:
                w += 1
            segments.append((start * win_s, min((w + 1) * win_s, duration_s)))
        w += 1
    return chosen, speech, segments, normalized

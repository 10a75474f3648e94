"""Seeded synthetic conversation corpus: 3-5 minute recordings with 1-4 speakers,
ground-truth RTTM, and a CSV manifest.

Voices are parametric (harmonic source, per-speaker spectral tilt, formant-like
resonances, syllabic amplitude modulation) so the repository stays
self-contained; a WAV-pool mode substitutes real single-speaker recordings when
available.
"""

from __future__ import annotations

import csv
import json
import wave as wave_module
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .audio_io import AudioClip, decode_wav
from .embeddings import embed_builtin
from .errors import EmptyWavPool, IoError
from .segments import LabeledSegmentation, Segment, from_rttm, write_rttm

SYNTH_SAMPLE_RATE = 16000
_LEAD_PAUSE_MS = 600
_TRAIL_PAUSE_MS = 500
_MIN_SPEAKER_SPEECH_MS = 12000  # keeps every true speaker safely above the 10 s pruning bar
_ROOM_TONE_RMS = 0.006  # continuous low-level bed; recordings never hit digital silence

# Stratified voice slots: f0 spans low (male-like, 85-180 Hz) and high
# (female-like, 165-255 Hz) ranges; distinct slots per recording guarantee the
# separation the builtin embedder needs. Formants are (center_hz, sigma_hz,
# gain) resonance bumps; the patterns are deliberately contrasting.
_F0_SLOTS = (92.0, 118.0, 152.0, 190.0, 225.0, 252.0)
_FORMANT_SLOTS = (
    ((450.0, 110.0, 1.0), (1450.0, 160.0, 0.5), (2500.0, 240.0, 0.25)),
    ((750.0, 130.0, 0.9), (1150.0, 150.0, 1.0), (2900.0, 260.0, 0.5)),
    ((300.0, 90.0, 1.0), (2100.0, 200.0, 0.8), (3300.0, 280.0, 0.15)),
    ((550.0, 120.0, 0.4), (950.0, 140.0, 1.0), (2250.0, 220.0, 0.7)),
    ((380.0, 100.0, 0.8), (1800.0, 180.0, 1.0), (2650.0, 240.0, 0.6)),
    ((650.0, 120.0, 1.0), (1350.0, 160.0, 0.3), (3050.0, 270.0, 0.9)),
)
_TILT_SLOTS = (2.0, 5.0, 8.0, 12.0)
_AM_SLOTS = (2.8, 3.4, 4.1, 4.8, 5.5)


@dataclass(frozen=True)
class SynthSpec:
    n_recordings: int
    speaker_range: tuple[int, int] = (1, 4)
    duration_range_s: tuple[float, float] = (180.0, 300.0)
    turn_length_s: tuple[float, float] = (5.0, 20.0)
    pause_s: tuple[float, float] = (0.5, 2.0)
    noise_snr_db: float | None = None
    seed: int = 0
    voice_mode: str = "parametric"  # or "wav_pool"
    wav_pool_dir: str | None = None

    def __post_init__(self):
        if self.n_recordings < 1:
            raise ValueError("n_recordings must be >= 1")
        for name, (lo, hi) in (
            ("speaker_range", self.speaker_range),
            ("duration_range_s", self.duration_range_s),
            ("turn_length_s", self.turn_length_s),
            ("pause_s", self.pause_s),
        ):
            if lo > hi:
                raise ValueError(f"{name} must be ordered, got ({lo}, {hi})")
        if not (1 <= self.speaker_range[0] and self.speaker_range[1] <= 10):
            raise ValueError("speaker_range must lie within [1, 10]")
        if self.voice_mode not in ("parametric", "wav_pool"):
            raise ValueError(f"unknown voice_mode {self.voice_mode!r}")
        if self.voice_mode == "wav_pool" and not self.wav_pool_dir:
            raise ValueError("wav_pool mode needs wav_pool_dir")


@dataclass(frozen=True)
class ManifestEntry:
    recording_id: str
    wav_path: str
    rttm_path: str
    true_speaker_count: int
    duration_s: float
    seed_used: int


@dataclass(frozen=True)
class CorpusManifest:
    entries: tuple[ManifestEntry, ...]


@dataclass(frozen=True)
class _Voice:
    f0_hz: float
    tilt_db_oct: float
    formants: tuple[tuple[float, float], ...]
    am_rate_hz: float
    level: float


def _sample_voices(rng: np.random.Generator, k: int) -> list[_Voice]:
    f0_idx = rng.choice(len(_F0_SLOTS), size=k, replace=False)
    formant_idx = rng.choice(len(_FORMANT_SLOTS), size=k, replace=False)
    tilt_idx = rng.choice(len(_TILT_SLOTS), size=min(k, len(_TILT_SLOTS)), replace=False)
    am_idx = rng.choice(len(_AM_SLOTS), size=min(k, len(_AM_SLOTS)), replace=False)
    voices = []
    for i in range(k):
        f0 = _F0_SLOTS[f0_idx[i]] * (1.0 + rng.uniform(-0.03, 0.03))
        voices.append(
            _Voice(
                f0_hz=f0,
                tilt_db_oct=_TILT_SLOTS[tilt_idx[i % len(tilt_idx)]],
                formants=_FORMANT_SLOTS[formant_idx[i]],
                am_rate_hz=_AM_SLOTS[am_idx[i % len(am_idx)]] * (1.0 + rng.uniform(-0.05, 0.05)),
                level=0.10 * (1.0 + rng.uniform(-0.2, 0.2)),
            )
        )
    return voices


def _formant_envelope(freqs: np.ndarray, formants) -> np.ndarray:
    env = np.full_like(freqs, 0.04)
    for center, sigma, gain in formants:
        env = env + gain * np.exp(-0.5 * ((freqs - center) / sigma) ** 2)
    return env


def _synth_turn(rng: np.random.Generator, voice: _Voice, n_samples: int, sr: int) -> np.ndarray:
    t = np.arange(n_samples) / sr
    vib_phase = rng.uniform(0, 2 * np.pi)
    drift_phase = rng.uniform(0, 2 * np.pi)
    f_inst = voice.f0_hz * (
        1.0
        + 0.015 * np.sin(2 * np.pi * 5.1 * t + vib_phase)
        + 0.012 * np.sin(2 * np.pi * 0.17 * t + drift_phase)
    )
    phase = 2.0 * np.pi * np.cumsum(f_inst) / sr
    n_harm = max(2, min(18, int(0.45 * sr / (voice.f0_hz * 1.05))))
    harm_freqs = voice.f0_hz * np.arange(1, n_harm + 1)
    amps = (np.arange(1, n_harm + 1) ** (-voice.tilt_db_oct / 6.0206)) * _formant_envelope(
        harm_freqs, voice.formants
    )
    base = np.exp(1j * phase)
    zh = np.ones_like(base)
    wave = np.zeros(n_samples)
    for h in range(n_harm):
        zh = zh * base
        wave += amps[h] * zh.imag

    am_phase = rng.uniform(0, 2 * np.pi)
    u = 0.5 * (1.0 + np.sin(2 * np.pi * voice.am_rate_hz * t + am_phase))
    envelope = 0.4 + 0.6 * u**1.4
    ramp_n = min(n_samples // 2, int(0.15 * sr))
    if ramp_n > 0:
        ramp = 0.5 * (1.0 - np.cos(np.linspace(0, np.pi, ramp_n)))
        envelope[:ramp_n] *= ramp
        envelope[-ramp_n:] *= ramp[::-1]
    wave = wave * envelope + 0.002 * rng.standard_normal(n_samples)
    rms = float(np.sqrt(np.mean(wave**2)))
    if rms > 0:
        wave *= voice.level / rms
    return np.clip(wave, -0.99, 0.99)


def _plan_schedule(rng, k, spec, duration_budget_ms):
    """Turn plan (speaker, start_ms, dur_ms): consecutive speakers differ, every
    speaker collects at least _MIN_SPEAKER_SPEECH_MS, recording fits the budget."""
    tmin = int(round(spec.turn_length_s[0] * 1000))
    tmax = int(round(spec.turn_length_s[1] * 1000))
    pmin = int(round(spec.pause_s[0] * 1000))
    pmax = int(round(spec.pause_s[1] * 1000))
    target = int(rng.integers(duration_budget_ms[0], duration_budget_ms[1] + 1))
    hard_cap = duration_budget_ms[1]

    for _ in range(64):
        turns = []
        t = _LEAD_PAUSE_MS
        prev = -1
        while t < target:
            choices = [s for s in range(k) if s != prev] or [0]
            spk = int(rng.choice(choices))
            dur = int(rng.integers(tmin, tmax + 1))
            if t + dur + _TRAIL_PAUSE_MS > hard_cap:
                dur = hard_cap - _TRAIL_PAUSE_MS - t
                if dur < tmin:
                    break
            turns.append((spk, t, dur))
            t += dur + int(rng.integers(pmin, pmax + 1))
            prev = spk
        totals = {s: 0 for s in range(k)}
        counts = {s: 0 for s in range(k)}
        for spk, _, dur in turns:
            totals[spk] += dur
            counts[spk] += 1
        if all(totals[s] >= _MIN_SPEAKER_SPEECH_MS and counts[s] >= 2 for s in range(k)):
            return turns

    # Deterministic fallback: round-robin with fixed-length turns.
    turns = []
    t = _LEAD_PAUSE_MS
    dur = max(tmin, _MIN_SPEAKER_SPEECH_MS // 2 + 500)
    spk = 0
    while t + dur + _TRAIL_PAUSE_MS <= hard_cap and (
        t < target or any(c < 2 for c in _counts(turns, k))
    ):
        turns.append((spk, t, dur))
        t += dur + pmin
        spk = (spk + 1) % k
    return turns


def _counts(turns, k):
    counts = [0] * k
    for spk, _, _ in turns:
        counts[spk] += 1
    return counts


def _load_pool(pool_dir) -> list[tuple[str, AudioClip]]:
    paths = sorted(Path(pool_dir).glob("*.wav"))
    pool = [(p.stem, decode_wav(p)) for p in paths]
    pool = [(name, clip) for name, clip in pool if len(clip.samples) > 0]
    if not pool:
        raise EmptyWavPool(f"no usable WAV files under {pool_dir}")
    rates = {clip.sample_rate for _, clip in pool}
    if len(rates) != 1:
        raise IoError(f"WAV pool mixes sample rates {sorted(rates)}")
    return pool


def _pool_slice(rng, clip: AudioClip, n_samples: int) -> np.ndarray:
    reps = int(np.ceil(n_samples / len(clip.samples)))
    tiled = np.tile(clip.samples, reps + 1)
    offset = int(rng.integers(0, len(clip.samples)))
    return tiled[offset : offset + n_samples]


def write_wav_pcm16(path, samples: np.ndarray, sample_rate: int) -> None:
    pcm = np.rint(np.clip(samples, -1.0, 1.0) * 32767.0).astype("<i2")
    try:
        with wave_module.open(str(path), "wb") as fh:
            fh.setnchannels(1)
            fh.setsampwidth(2)
            fh.setframerate(sample_rate)
            fh.writeframes(pcm.tobytes())
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from None


def synth_recording(spec: SynthSpec, index: int, pool=None):
    """One recording: (samples, sample_rate, ground truth LabeledSegmentation, seed_used)."""
    ss = np.random.SeedSequence(entropy=spec.seed, spawn_key=(index,))
    seed_used = int(ss.generate_state(1)[0])
    rng = np.random.default_rng(ss)
    k = int(rng.integers(spec.speaker_range[0], spec.speaker_range[1] + 1))
    budget = (
        int(round(spec.duration_range_s[0] * 1000)),
        int(round(spec.duration_range_s[1] * 1000)),
    )
    turns = _plan_schedule(rng, k, spec, budget)
    sr = SYNTH_SAMPLE_RATE
    voices = None
    speakers_from_pool = None
    if spec.voice_mode == "parametric":
        voices = _sample_voices(rng, k)
    else:
        pool = pool if pool is not None else _load_pool(spec.wav_pool_dir)
        sr = pool[0][1].sample_rate
        chosen = rng.choice(len(pool), size=min(k, len(pool)), replace=False)
        speakers_from_pool = [pool[int(i)] for i in chosen]
        k = len(speakers_from_pool)

    end_ms = max(t + d for _, t, d in turns) + _TRAIL_PAUSE_MS if turns else budget[0]
    duration_ms = min(max(end_ms, budget[0]), budget[1])
    n_total = int(round(duration_ms * sr / 1000))
    samples = _ROOM_TONE_RMS * rng.standard_normal(n_total)
    segments = []
    for spk, start_ms, dur_ms in turns:
        lo = int(round(start_ms * sr / 1000))
        n = int(round(dur_ms * sr / 1000))
        if spec.voice_mode == "parametric":
            turn_wave = _synth_turn(rng, voices[spk], n, sr)
            label = f"S{spk + 1}"
        else:
            name, clip = speakers_from_pool[spk % len(speakers_from_pool)]
            turn_wave = _pool_slice(rng, clip, n)
            label = name
        samples[lo : lo + n] += turn_wave[: len(samples) - lo]
        segments.append(Segment(start_ms / 1000.0, (start_ms + dur_ms) / 1000.0, label))

    if spec.noise_snr_db is not None:
        speech_mask = np.zeros(n_total, dtype=bool)
        for _, start_ms, dur_ms in turns:
            lo = int(round(start_ms * sr / 1000))
            speech_mask[lo : lo + int(round(dur_ms * sr / 1000))] = True
        p_speech = float(np.mean(samples[speech_mask] ** 2)) if speech_mask.any() else 0.0
        if p_speech > 0:
            sigma = np.sqrt(p_speech / (10.0 ** (spec.noise_snr_db / 10.0)))
            samples = samples + sigma * rng.standard_normal(n_total)
    samples = np.clip(samples, -0.99, 0.99)

    truth = LabeledSegmentation(
        recording_id=f"rec{index:03d}",
        segments=tuple(sorted(segments, key=lambda s: s.start_s)),
        total_duration_s=duration_ms / 1000.0,
    )
    return samples, sr, truth, seed_used


def synth_corpus(spec: SynthSpec, out_dir, measure_separation: bool = True) -> CorpusManifest:
    """Write WAV + RTTM per recording plus manifest.csv and corpus_meta.json."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoError(f"cannot create {out}: {exc}") from None
    pool = _load_pool(spec.wav_pool_dir) if spec.voice_mode == "wav_pool" else None

    entries = []
    separation_rows = []
    for index in range(spec.n_recordings):
        samples, sr, truth, seed_used = synth_recording(spec, index, pool)
        wav_name = f"{truth.recording_id}.wav"
        rttm_name = f"{truth.recording_id}.rttm"
        write_wav_pcm16(out / wav_name, samples, sr)
        write_rttm(truth, out / rttm_name)
        entries.append(
            ManifestEntry(
                recording_id=truth.recording_id,
                wav_path=wav_name,
                rttm_path=rttm_name,
                true_speaker_count=len(truth.labels),
                duration_s=truth.total_duration_s,
                seed_used=seed_used,
            )
        )
        if measure_separation and len(truth.labels) >= 1:
            clip = AudioClip(samples=samples, sample_rate=sr)
            separation_rows.append(_separation_stats(clip, truth))

    manifest = CorpusManifest(entries=tuple(entries))
    write_manifest(manifest, out / "manifest.csv")
    meta = {
        "n_recordings": spec.n_recordings,
        "seed": spec.seed,
        "speaker_range": list(spec.speaker_range),
        "duration_range_s": list(spec.duration_range_s),
        "turn_length_s": list(spec.turn_length_s),
        "pause_s": list(spec.pause_s),
        "noise_snr_db": spec.noise_snr_db,
        "voice_mode": spec.voice_mode,
    }
    if separation_rows:
        within = [r["within_min"] for r in separation_rows if r["within_min"] is not None]
        across = [r["across_max"] for r in separation_rows if r["across_max"] is not None]
        meta["embedding_separation"] = {
            "within_cosine_min": min(within) if within else None,
            "across_cosine_max": max(across) if across else None,
            "gap": (min(within) - max(across)) if within and across else None,
        }
    (out / "corpus_meta.json").write_text(
        json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return manifest


def _separation_stats(clip: AudioClip, truth: LabeledSegmentation) -> dict:
    """Within/across cosine similarity of builtin embeddings of turn centers."""
    vecs: dict[str, list[np.ndarray]] = {}
    for seg in truth.segments:
        mid = 0.5 * (seg.start_s + seg.end_s)
        half = min(0.75, seg.duration_s / 2.0)
        emb = embed_builtin(clip, (mid - half, mid + half))
        vecs.setdefault(seg.label, []).append(emb.vector)
    within = []
    across = []
    labels = sorted(vecs)
    for i, a in enumerate(labels):
        va = vecs[a]
        within.extend(float(va[p] @ va[q]) for p in range(len(va)) for q in range(p + 1, len(va)))
        for b in labels[i + 1 :]:
            across.extend(float(x @ y) for x in va for y in vecs[b])
    return {
        "within_min": min(within) if within else None,
        "across_max": max(across) if across else None,
    }


def write_manifest(manifest: CorpusManifest, path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            ["recording_id", "wav_path", "rttm_path", "true_speaker_count", "duration_s", "seed_used"]
        )
        for e in manifest.entries:
            writer.writerow(
                [
                    e.recording_id,
                    e.wav_path,
                    e.rttm_path,
                    e.true_speaker_count,
                    format(e.duration_s, ".3f"),
                    e.seed_used,
                ]
            )


def read_manifest(path) -> CorpusManifest:
    path = Path(path)
    if not path.exists():
        raise IoError(f"manifest not found: {path}")
    entries = []
    with path.open("r", encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            entries.append(
                ManifestEntry(
                    recording_id=row["recording_id"],
                    wav_path=row["wav_path"],
                    rttm_path=row["rttm_path"],
                    true_speaker_count=int(row["true_speaker_count"]),
                    duration_s=float(row["duration_s"]),
                    seed_used=int(row["seed_used"]),
                )
            )
    return CorpusManifest(entries=tuple(entries))


def validate_corpus(manifest_path) -> dict:
    """Self-consistency checks: RTTM labels vs manifest counts, segment bounds vs
    WAV durations, no same-speaker overlap. Returns per-entry pass/fail."""
    manifest_path = Path(manifest_path)
    manifest = read_manifest(manifest_path)
    base = manifest_path.parent
    report = {"entries": [], "all_passed": True}
    for e in manifest.entries:
        problems = []
        try:
            clip = decode_wav(base / e.wav_path)
            wav_dur = clip.duration_seconds
        except Exception as exc:
            problems.append(f"wav unreadable: {exc}")
            wav_dur = None
        try:
            truth = from_rttm(base / e.rttm_path, total_duration_s=None)
        except Exception as exc:
            problems.append(f"rttm unreadable: {exc}")
            truth = None
        if truth is not None:
            if len(truth.labels) != e.true_speaker_count:
                problems.append(
                    f"label count {len(truth.labels)} != manifest count {e.true_speaker_count}"
                )
            if wav_dur is not None:
                for seg in truth.segments:
                    if seg.end_s > wav_dur + 0.002 or seg.start_s < -0.002:
                        problems.append(
                            f"segment [{seg.start_s:.3f}, {seg.end_s:.3f}) outside WAV of {wav_dur:.3f} s"
                        )
                        break
            by_label: dict[str, float] = {}
            for seg in sorted(truth.segments, key=lambda s: s.start_s):
                if seg.label in by_label and seg.start_s < by_label[seg.label] - 1e-6:
                    problems.append(f"same-speaker overlap for {seg.label}")
                    break
                by_label[seg.label] = max(by_label.get(seg.label, 0.0), seg.end_s)
        passed = not problems
        report["entries"].append(
            {"recording_id": e.recording_id, "passed": passed, "problems": problems}
        )
        report["all_passed"] = report["all_passed"] and passed
    return report

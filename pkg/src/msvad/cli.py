"""Command-line entry point: corpus synthesis, offline/stream diarization, and
count-metric evaluation.

Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import sys
from pathlib import Path

from . import __version__
from .audio_io import decode_wav
from .config import PipelineConfig, config_to_toml, load_config, save_config
from .corpus import SynthSpec, read_manifest, synth_corpus, validate_corpus
from .errors import MsvadError
from .metrics import evaluate, report_markdown, write_breakdown_csv
from .pipeline import analyze_clip, stream_clip
from .segments import write_rttm

USAGE_ERROR = 2
RUNTIME_ERROR = 1


def _parse_range(text: str, kind=float):
    parts = text.split(":")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected MIN:MAX, got {text!r}")
    try:
        lo, hi = kind(parts[0]), kind(parts[1])
    except ValueError:
        raise argparse.ArgumentTypeError(f"non-numeric range {text!r}") from None
    if lo > hi:
        raise argparse.ArgumentTypeError(f"range must be ordered, got {text!r}")
    return (lo, hi)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="msvad",
        description="Count active speakers in home-monitoring audio via multi-stream "
        "VAD fusion and Bayesian-HMM clustering.",
    )
    parser.add_argument("--version", action="version", version=f"msvad {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_synth = sub.add_parser("synth", help="generate a labeled synthetic corpus")
    p_synth.add_argument("--num", type=int, required=True, help="number of recordings")
    p_synth.add_argument("--speakers", type=lambda t: _parse_range(t, int), default=(1, 4))
    p_synth.add_argument("--duration", type=_parse_range, default=(180.0, 300.0), help="seconds MIN:MAX")
    p_synth.add_argument("--turn", type=_parse_range, default=(5.0, 20.0), help="turn seconds MIN:MAX")
    p_synth.add_argument("--pause", type=_parse_range, default=(0.5, 2.0), help="pause seconds MIN:MAX")
    p_synth.add_argument("--snr", type=float, default=None, help="additive noise SNR in dB")
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument(
        "--voices",
        default="parametric",
        help="'parametric' or 'pool:<dir>' of single-speaker WAVs",
    )
    p_synth.add_argument("--out", required=True, help="output directory")
    p_synth.add_argument("--validate", action="store_true", help="self-check after writing")

    p_diar = sub.add_parser("diarize", help="diarize WAV recordings")
    p_diar.add_argument("inputs", nargs="+", help="input WAV file(s)")
    p_diar.add_argument("--config", default=None, help="pipeline config TOML")
    p_diar.add_argument("--mode", choices=["offline", "stream"], default="offline")
    p_diar.add_argument(
        "--probs",
        action="append",
        default=[],
        help="external msvad-probs stream file (repeatable)",
    )
    p_diar.add_argument("--embs", default=None, help="external msvad-embs file")
    p_diar.add_argument("--out", default=".", help="output directory (offline mode)")
    p_diar.add_argument("--jobs", type=int, default=1, help="parallel recordings (offline)")
    p_diar.add_argument("--dump-config", default=None, help="write the effective config here")

    p_eval = sub.add_parser("eval", help="score hypothesis counts against a manifest")
    p_eval.add_argument("--manifest", required=True)
    p_eval.add_argument("--hyp", required=True, help="directory of <recording_id>.json hypotheses")
    p_eval.add_argument("--report", choices=["json", "md"], default="json")
    p_eval.add_argument("--out", default=None, help="report file (default: stdout)")
    p_eval.add_argument("--breakdown-csv", default=None, help="per-true-count rates CSV")
    p_eval.add_argument(
        "--dfr-subset",
        choices=["single"],
        default=None,
        help="also compute DFR over the true-count-1 subset",
    )

    p_cfg = sub.add_parser("config", help="emit the effective pipeline config")
    p_cfg.add_argument("--config", default=None, help="load and echo this config")
    p_cfg.add_argument("--out", default=None, help="write TOML here (default: stdout)")
    return parser


def _load_cfg(path) -> PipelineConfig:
    if path is None:
        return PipelineConfig()
    if not Path(path).exists():
        raise FileNotFoundError(f"config not found: {path}")
    return load_config(path)


def cmd_synth(args) -> int:
    if args.num < 1:
        raise UsageError("--num must be >= 1")
    voice_mode, pool_dir = "parametric", None
    if args.voices != "parametric":
        if not args.voices.startswith("pool:"):
            raise UsageError(f"--voices must be 'parametric' or 'pool:<dir>', got {args.voices!r}")
        voice_mode, pool_dir = "wav_pool", args.voices[5:]
        if not Path(pool_dir).is_dir():
            raise UsageError(f"WAV pool directory not found: {pool_dir}")
    spec = SynthSpec(
        n_recordings=args.num,
        speaker_range=args.speakers,
        duration_range_s=args.duration,
        turn_length_s=args.turn,
        pause_s=args.pause,
        noise_snr_db=args.snr,
        seed=args.seed,
        voice_mode=voice_mode,
        wav_pool_dir=pool_dir,
    )
    manifest = synth_corpus(spec, args.out)
    print(f"wrote {len(manifest.entries)} recordings to {args.out}")
    if args.validate:
        report = validate_corpus(Path(args.out) / "manifest.csv")
        if not report["all_passed"]:
            bad = [e["recording_id"] for e in report["entries"] if not e["passed"]]
            print(f"validation failed for: {', '.join(bad)}", file=sys.stderr)
            return RUNTIME_ERROR
        print("validation passed")
    return 0


def _diarize_one(path: str, cfg: PipelineConfig, probs, embs, out_dir: Path) -> str:
    clip = decode_wav(path)
    rec_id = Path(path).stem
    output = analyze_clip(clip, cfg, prob_files=probs, emb_file=embs, recording_id=rec_id)
    write_rttm(output.result.labeled, out_dir / f"{rec_id}.rttm")
    write_rttm(output.fused, out_dir / f"{rec_id}.speech.rttm")  # unlabeled fusion output
    payload = output.result.to_json_obj()
    payload["recording_id"] = rec_id
    payload["fused_speech_s"] = round(output.fused.speech_duration_s, 6)
    payload["speech_segments"] = [
        [round(a, 6), round(b, 6)] for a, b in output.fused.spans()
    ]
    (out_dir / f"{rec_id}.json").write_text(
        json.dumps(payload, indent=2) + "\n", encoding="utf-8"
    )
    return rec_id


def cmd_diarize(args) -> int:
    for p in args.inputs:
        if not Path(p).exists():
            raise UsageError(f"input not found: {p}")
    for p in args.probs:
        if not Path(p).exists():
            raise UsageError(f"probability stream not found: {p}")
    if args.embs and not Path(args.embs).exists():
        raise UsageError(f"embedding file not found: {args.embs}")
    cfg = _load_cfg(args.config)
    if args.dump_config:
        save_config(cfg, args.dump_config)

    if args.mode == "stream":
        if len(args.inputs) != 1:
            raise UsageError("stream mode takes exactly one input")
        clip = decode_wav(args.inputs[0])

        def emit(event):
            print(json.dumps(event.to_json_obj()), flush=True)

        stream_clip(
            clip,
            cfg,
            prob_files=args.probs,
            recording_id=Path(args.inputs[0]).stem,
            on_event=emit,
        )
        return 0

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    jobs = max(1, args.jobs)
    if jobs == 1 or len(args.inputs) == 1:
        for path in args.inputs:
            rec_id = _diarize_one(path, cfg, args.probs, args.embs, out_dir)
            print(f"diarized {rec_id}")
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = {
                pool.submit(_diarize_one, path, cfg, args.probs, args.embs, out_dir): path
                for path in args.inputs
            }
            for fut in concurrent.futures.as_completed(futures):
                print(f"diarized {fut.result()}")
    return 0


def cmd_eval(args) -> int:
    manifest = read_manifest(args.manifest)
    hyp_dir = Path(args.hyp)
    if not hyp_dir.is_dir():
        raise UsageError(f"hypothesis directory not found: {hyp_dir}")
    pairs = []
    missing = []
    for entry in manifest.entries:
        hyp_path = hyp_dir / f"{entry.recording_id}.json"
        if not hyp_path.exists():
            missing.append(entry.recording_id)
            continue
        hyp = json.loads(hyp_path.read_text(encoding="utf-8"))
        pairs.append((int(hyp["speaker_count"]), entry.true_speaker_count))
    if missing:
        print(f"missing hypotheses for: {', '.join(missing)}", file=sys.stderr)
        return RUNTIME_ERROR
    report = evaluate(pairs, dfr_subset=args.dfr_subset == "single")
    if args.report == "md":
        text = report_markdown(report)
    else:
        text = json.dumps(report.to_json_obj(), indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        print(text, end="")
    if args.breakdown_csv:
        write_breakdown_csv(report, args.breakdown_csv)
    return 0


def cmd_config(args) -> int:
    cfg = _load_cfg(args.config)
    text = config_to_toml(cfg)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        print(text, end="")
    return 0


class UsageError(Exception):
    pass


_COMMANDS = {"synth": cmd_synth, "diarize": cmd_diarize, "eval": cmd_eval, "config": cmd_config}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse uses 2 for usage errors already
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except MsvadError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return RUNTIME_ERROR
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return RUNTIME_ERROR


if __name__ == "__main__":
    sys.exit(main())

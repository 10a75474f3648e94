"""Command line: msvad-adapter vad|embed --wav <p> --model <name> --out <p>.

Exit codes: 0 success, 1 model/input failure, 2 usage error, 3 output failed
self-validation.
"""

from __future__ import annotations

import argparse
import sys

from .jobs import AdapterJob, run_embedding_job, run_vad_job


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="msvad-adapter",
        description="Run a pretrained TorchScript VAD or speaker-embedding model "
        "and emit msvad wire-format files.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_vad = sub.add_parser("vad", help="per-frame speech probabilities (msvad-probs)")
    p_vad.add_argument("--wav", required=True)
    p_vad.add_argument("--model", required=True, help="TorchScript model file")
    p_vad.add_argument("--hop-ms", type=int, default=10)
    p_vad.add_argument("--source", default=None, help="source id (default: model stem)")
    p_vad.add_argument("--out", required=True)

    p_emb = sub.add_parser("embed", help="segment embeddings (msvad-embs)")
    p_emb.add_argument("--wav", required=True)
    p_emb.add_argument("--model", required=True, help="TorchScript model file")
    p_emb.add_argument("--segments", default=None, help="RTTM of spans (default: sliding windows)")
    p_emb.add_argument("--win-s", type=float, default=1.5)
    p_emb.add_argument("--step-s", type=float, default=0.75)
    p_emb.add_argument("--out", required=True)
    return parser


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "vad":
            job = AdapterJob(
                wav_path=args.wav,
                model_kind="vad",
                model_name=args.model,
                out_path=args.out,
                hop_ms=args.hop_ms,
                source_id=args.source,
            )
            return run_vad_job(job)
        job = AdapterJob(
            wav_path=args.wav,
            model_kind="embedding",
            model_name=args.model,
            out_path=args.out,
            win_s=args.win_s,
            step_s=args.step_s,
            segments_path=args.segments,
        )
        return run_embedding_job(job)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

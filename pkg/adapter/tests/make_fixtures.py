"""Regenerate the checked-in wire-format fixtures from the tiny test models.

Run from the adapter directory: python tests/make_fixtures.py
"""

import tempfile
from pathlib import Path

from conftest import FIXTURES, save_embedding_model, save_vad_model, tone_and_silence_wav
from msvad_adapter.jobs import AdapterJob, run_embedding_job, run_vad_job


def main():
    FIXTURES.mkdir(exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        wav = tone_and_silence_wav(tmp / "tone.wav")
        vad = save_vad_model(tmp / "vad.pt")
        emb = save_embedding_model(tmp / "emb.pt")
        rttm = tmp / "seg.rttm"
        rttm.write_text(
            "SPEAKER tone 1 1.000 0.900 <NA> <NA> speech <NA> <NA>\n"
            "SPEAKER tone 1 1.900 0.600 <NA> <NA> speech <NA> <NA>\n"
            "SPEAKER tone 1 2.500 0.500 <NA> <NA> speech <NA> <NA>\n"
        )
        code = run_vad_job(
            AdapterJob(
                wav_path=str(wav),
                model_kind="vad",
                model_name=str(vad),
                out_path=str(FIXTURES / "tone_vad.probs"),
                hop_ms=10,
                source_id="tiny-energy-vad",
            )
        )
        assert code == 0, code
        code = run_embedding_job(
            AdapterJob(
                wav_path=str(wav),
                model_kind="embedding",
                model_name=str(emb),
                out_path=str(FIXTURES / "tone_emb.embs"),
                segments_path=str(rttm),
            )
        )
        assert code == 0, code

    # Error-case files for the primary loaders' contract checks.
    (FIXTURES / "bad_header.probs").write_text("#msvad-probs v2 hop_ms=10 source=x\n0.5\n")
    (FIXTURES / "clamped_values.probs").write_text(
        "#msvad-probs v1 hop_ms=10 source=hot\n0.500000\n1.300000\n-0.250000\n0.900000\n"
    )
    (FIXTURES / "mixed_dim.embs").write_text(
        "#msvad-embs v1 dim=4\n0.000,1.000,0.1,0.2,0.3,0.4\n1.000,2.000,0.1,0.2,0.3\n"
    )
    print(f"fixtures written to {FIXTURES}")


if __name__ == "__main__":
    main()

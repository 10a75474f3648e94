import warnings

import numpy as np
import pytest

from conftest import tone_and_silence_wav
from msvad_adapter.cli import main
from msvad_adapter.jobs import AdapterJob, run_embedding_job, run_vad_job
from msvad_adapter.wire import validate_file


class TestVadJob:
    def test_line_count_follows_hop(self, vad_model, wav_file, tmp_path):
        out = tmp_path / "v.probs"
        job = AdapterJob(
            wav_path=str(wav_file), model_kind="vad", model_name=str(vad_model),
            out_path=str(out), hop_ms=10,
        )
        assert run_vad_job(job) == 0
        n = validate_file(out, "probs")
        assert n == 400  # 4 s at 10 ms hop
        header = out.read_text().split("\n", 1)[0]
        assert "hop_ms=10" in header and "source=vad" in header

    def test_silence_smoke_check(self, vad_model, tmp_path):
        import wave as wave_module

        silent = tmp_path / "silent.wav"
        with wave_module.open(str(silent), "wb") as fh:
            fh.setnchannels(1)
            fh.setsampwidth(2)
            fh.setframerate(16000)
            fh.writeframes(b"\x00\x00" * 16000)
        out = tmp_path / "s.probs"
        job = AdapterJob(
            wav_path=str(silent), model_kind="vad", model_name=str(vad_model),
            out_path=str(out),
        )
        assert run_vad_job(job) == 0
        values = [float(v) for v in out.read_text().split("\n")[1:-1]]
        if np.mean(values) > 0.2:  # smoke check, warning only
            warnings.warn(f"model scores silence at {np.mean(values):.2f}")
        assert np.mean(values) <= 0.2

    def test_unreadable_wav_exits_one_no_partial_output(self, vad_model, tmp_path):
        bogus = tmp_path / "not.wav"
        bogus.write_bytes(b"not audio")
        out = tmp_path / "sub" / "x.probs"
        job = AdapterJob(
            wav_path=str(bogus), model_kind="vad", model_name=str(vad_model),
            out_path=str(out),
        )
        assert run_vad_job(job) == 1
        assert not out.exists()
        assert not any(out.parent.glob("*")) if out.parent.exists() else True

    def test_missing_model_exits_one(self, wav_file, tmp_path):
        job = AdapterJob(
            wav_path=str(wav_file), model_kind="vad", model_name=str(tmp_path / "no.pt"),
            out_path=str(tmp_path / "x.probs"),
        )
        assert run_vad_job(job) == 1

    def test_determinism(self, vad_model, wav_file, tmp_path):
        outs = []
        for name in ("a.probs", "b.probs"):
            out = tmp_path / name
            job = AdapterJob(
                wav_path=str(wav_file), model_kind="vad", model_name=str(vad_model),
                out_path=str(out),
            )
            assert run_vad_job(job) == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]


class TestEmbeddingJob:
    def test_three_segments_three_rows(self, embedding_model, wav_file, tmp_path):
        rttm = tmp_path / "seg.rttm"
        rttm.write_text(
            "SPEAKER t 1 1.000 0.800 <NA> <NA> a <NA> <NA>\n"
            "SPEAKER t 1 1.800 0.700 <NA> <NA> a <NA> <NA>\n"
            "SPEAKER t 1 2.500 0.500 <NA> <NA> a <NA> <NA>\n"
        )
        out = tmp_path / "e.embs"
        job = AdapterJob(
            wav_path=str(wav_file), model_kind="embedding",
            model_name=str(embedding_model), out_path=str(out),
            segments_path=str(rttm),
        )
        assert run_embedding_job(job) == 0
        assert validate_file(out, "embs") == 3
        assert out.read_text().startswith("#msvad-embs v1 dim=8\n")

    def test_empty_segment_list_header_only(self, embedding_model, wav_file, tmp_path):
        rttm = tmp_path / "empty.rttm"
        rttm.write_text("")
        out = tmp_path / "e.embs"
        job = AdapterJob(
            wav_path=str(wav_file), model_kind="embedding",
            model_name=str(embedding_model), out_path=str(out),
            segments_path=str(rttm),
        )
        assert run_embedding_job(job) == 0
        assert out.read_text() == "#msvad-embs v1 dim=0\n"

    def test_sliding_windows_default(self, embedding_model, wav_file, tmp_path):
        out = tmp_path / "w.embs"
        job = AdapterJob(
            wav_path=str(wav_file), model_kind="embedding",
            model_name=str(embedding_model), out_path=str(out),
        )
        assert run_embedding_job(job) == 0
        n = validate_file(out, "embs")
        assert n == 4  # (4 - 1.5)/0.75 + 1 sliding spans

    def test_determinism(self, embedding_model, wav_file, tmp_path):
        outs = []
        for name in ("a.embs", "b.embs"):
            out = tmp_path / name
            job = AdapterJob(
                wav_path=str(wav_file), model_kind="embedding",
                model_name=str(embedding_model), out_path=str(out),
            )
            assert run_embedding_job(job) == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]


class TestCli:
    def test_vad_subcommand(self, vad_model, wav_file, tmp_path):
        out = tmp_path / "cli.probs"
        code = main([
            "vad", "--wav", str(wav_file), "--model", str(vad_model),
            "--hop-ms", "20", "--source", "neural-1", "--out", str(out),
        ])
        assert code == 0
        text = out.read_text()
        assert text.startswith("#msvad-probs v1 hop_ms=20 source=neural-1\n")
        assert validate_file(out, "probs") == 200

    def test_embed_subcommand(self, embedding_model, wav_file, tmp_path):
        out = tmp_path / "cli.embs"
        code = main([
            "embed", "--wav", str(wav_file), "--model", str(embedding_model),
            "--out", str(out),
        ])
        assert code == 0
        assert validate_file(out, "embs") == 4

    def test_usage_error(self):
        assert main(["vad"]) == 2

    def test_job_validation(self):
        with pytest.raises(ValueError):
            AdapterJob(wav_path="x", model_kind="nope", model_name="m", out_path="o")

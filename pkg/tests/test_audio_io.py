import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import write_wav_float32, write_wav_int16
from msvad.audio_io import (
    SILENCE_EPS,
    SILENCE_FLOOR,
    AudioClip,
    FeatureKind,
    compute_features,
    decode_wav,
    extract_frames,
    frame_signal,
)
from msvad.errors import CorruptFile, InvalidGrid, UnsupportedFormat


class TestDecodeWav:
    def test_one_second_mono_sample_count(self, tmp_path):
        path = write_wav_int16(tmp_path / "a.wav", np.zeros(16000), 16000)
        clip = decode_wav(path)
        assert len(clip.samples) == 16000
        assert clip.sample_rate == 16000
        assert clip.duration_seconds == 1.0

    def test_opposite_stereo_channels_cancel(self, tmp_path):
        x = 0.5 * np.sin(2 * np.pi * 440 * np.arange(8000) / 16000)
        stereo = np.stack([x, -x], axis=1)
        path = write_wav_int16(tmp_path / "s.wav", stereo, 16000, channels=2)
        clip = decode_wav(path)
        assert clip.channel_count == 2
        assert np.all(clip.samples == 0.0)

    def test_int16_min_maps_to_minus_one(self, tmp_path):
        # oracle: two's-complement scaling -32768/32768
        import wave

        with wave.open(str(tmp_path / "m.wav"), "wb") as fh:
            fh.setnchannels(1)
            fh.setsampwidth(2)
            fh.setframerate(16000)
            fh.writeframes(np.array([-32768, 32767, 0], dtype="<i2").tobytes())
        clip = decode_wav(tmp_path / "m.wav")
        assert clip.samples[0] == -32768 / 32768
        assert clip.samples[0] == -1.0
        assert clip.samples[1] == 32767 / 32768

    def test_float32_roundtrip_and_clipping(self, tmp_path):
        x = np.array([0.25, -0.5, 1.5, -2.0], dtype=np.float32)
        path = write_wav_float32(tmp_path / "f.wav", x, 16000)
        clip = decode_wav(path)
        assert np.allclose(clip.samples, [0.25, -0.5, 1.0, -1.0])
        assert clip.samples.min() >= -1.0 and clip.samples.max() <= 1.0

    def test_non_wav_rejected(self, tmp_path):
        p = tmp_path / "x.wav"
        p.write_bytes(b"ID3\x00 definitely not a wav file, padded out....")
        with pytest.raises(UnsupportedFormat):
            decode_wav(p)

    def test_unsupported_codec_rejected(self, tmp_path):
        import struct

        data = b"\x00" * 16
        fmt = b"fmt " + struct.pack("<IHHIIHH", 16, 7, 1, 8000, 8000, 1, 8)  # mu-law
        body = fmt + b"data" + struct.pack("<I", len(data)) + data
        p = tmp_path / "u.wav"
        p.write_bytes(b"RIFF" + struct.pack("<I", 4 + len(body)) + b"WAVE" + body)
        with pytest.raises(UnsupportedFormat):
            decode_wav(p)

    def test_truncated_data_rejected(self, tmp_path):
        path = write_wav_int16(tmp_path / "t.wav", np.zeros(1000), 16000)
        raw = path.read_bytes()
        path.write_bytes(raw[: len(raw) - 500])
        with pytest.raises(CorruptFile):
            decode_wav(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            decode_wav(tmp_path / "nope.wav")

    def test_mixdown_is_channel_mean(self, tmp_path):
        rng = np.random.default_rng(3)
        chans = rng.uniform(-1, 1, size=(400, 3))
        multi = decode_wav(write_wav_int16(tmp_path / "m3.wav", chans, 8000, channels=3))
        singles = [
            decode_wav(write_wav_int16(tmp_path / f"c{i}.wav", chans[:, i], 8000))
            for i in range(3)
        ]
        mean = np.mean([c.samples for c in singles], axis=0)
        assert np.max(np.abs(multi.samples - mean)) <= np.finfo(np.float64).eps * 4


class TestFrameSignal:
    def test_one_second_default_grid(self):
        clip = AudioClip(np.zeros(16000), 16000)
        grid = frame_signal(clip, 10, 25)
        # oracle: floor((1000-25)/10)+1
        assert grid.n_frames == (1000 - 25) // 10 + 1 == 98

    def test_clip_shorter_than_frame(self):
        clip = AudioClip(np.zeros(160), 16000)  # 10 ms
        assert frame_signal(clip, 10, 25).n_frames == 0

    def test_single_exact_frame(self):
        clip = AudioClip(np.zeros(4000), 16000)  # 250 ms
        assert frame_signal(clip, 250, 250).n_frames == 1

    @pytest.mark.parametrize("hop,frame", [(0, 25), (-5, 25), (10, 5)])
    def test_invalid_grid(self, hop, frame):
        clip = AudioClip(np.zeros(16000), 16000)
        with pytest.raises(InvalidGrid):
            frame_signal(clip, hop, frame)

    @given(
        n_samples=st.integers(min_value=0, max_value=60000),
        sr=st.sampled_from([8000, 16000, 22050, 44100]),
        hop=st.sampled_from([5, 10, 20, 25]),
        extra=st.integers(min_value=0, max_value=30),
    )
    @settings(max_examples=60, deadline=None)
    def test_framing_total(self, n_samples, sr, hop, extra):
        clip = AudioClip(np.zeros(n_samples), sr)
        frame = hop + extra
        grid = frame_signal(clip, hop, frame)
        frame_len = round(frame * sr / 1000)
        if grid.n_frames > 0:
            frames = extract_frames(clip, grid)
            assert frames.shape == (grid.n_frames, frame_len)
            # every frame's real samples lie within the clip; overruns are zeros
            last_start = round((grid.n_frames - 1) * hop * sr / 1000)
            assert last_start < max(n_samples, 1)


class TestComputeFeatures:
    def test_zero_clip_log_energy_is_silence_floor(self):
        clip = AudioClip(np.zeros(16000), 16000)
        grid = frame_signal(clip)
        feats = compute_features(clip, grid, FeatureKind.LOG_ENERGY)
        assert feats.n_coeffs == 1
        assert np.all(feats.values == np.log(SILENCE_EPS))
        assert np.all(feats.values == SILENCE_FLOOR)

    def test_dc_signal_interior_rows_identical(self):
        clip = AudioClip(np.full(16000, 1.0), 16000)
        grid = frame_signal(clip)
        for kind in (FeatureKind.LOG_MEL, FeatureKind.MFCC):
            feats = compute_features(clip, grid, kind, 20)
            interior = feats.values[:-1]  # last frame may be zero-padded
            assert np.all(interior == interior[0])

    def test_sine_energy_near_half(self):
        # oracle: mean square of a unit sine over a window = 0.5
        sr = 16000
        clip = AudioClip(np.sin(2 * np.pi * 440 * np.arange(sr) / sr), sr)
        grid = frame_signal(clip)
        feats = compute_features(clip, grid, FeatureKind.LOG_ENERGY)
        energies = np.exp(feats.values[:-1, 0])
        assert np.all(np.abs(energies - 0.5) < 0.005)

    def test_determinism(self):
        rng = np.random.default_rng(5)
        clip = AudioClip(rng.uniform(-1, 1, 8000), 16000)
        grid = frame_signal(clip)
        a = compute_features(clip, grid, FeatureKind.MFCC, 20)
        b = compute_features(clip, grid, FeatureKind.MFCC, 20)
        assert np.array_equal(a.values, b.values)

    def test_finite_on_random_input(self):
        rng = np.random.default_rng(6)
        clip = AudioClip(rng.uniform(-1, 1, 12000), 16000)
        grid = frame_signal(clip)
        for kind in FeatureKind:
            feats = compute_features(clip, grid, kind, 13)
            assert np.all(np.isfinite(feats.values))

    def test_grid_from_other_clip_rejected(self):
        clip = AudioClip(np.zeros(16000), 16000)
        other = AudioClip(np.zeros(32000), 16000)
        grid = frame_signal(other)
        with pytest.raises(InvalidGrid):
            compute_features(clip, grid, FeatureKind.LOG_MEL, 40)

    def test_bad_n_coeffs(self):
        clip = AudioClip(np.zeros(16000), 16000)
        grid = frame_signal(clip)
        with pytest.raises(InvalidGrid):
            compute_features(clip, grid, FeatureKind.MFCC, 0)

import numpy as np
import pytest

from src.core.audio_io import (
    ABNORMAL, NORMAL, AudioCycle, DatasetManifest, ManifestEntry, load_cycle, load_manifest,
    normalize_amplitude, prepare_cycle, resample, save_cycle, save_manifest,
)
from src.core.errors import (
    ConflictingLabelError, DuplicateCycleError, EmptyManifestError, ManifestHeaderError,
    MissingFileError, NotMonoError, SilentCycleError, UnknownLabelError, UnreadableAudioError,
    UnsupportedEncodingError, UpsampleError,
)


def _tone(freq, rate, n):
    return np.sin(2 * np.pi * freq * np.arange(n) / rate)


class TestLoadCycle:
    def test_single_sample_scaling(self, write_wav):
        path = write_wav("half.wav", np.array([16384], dtype=np.int16), 8000)
        cycle = load_cycle(path)
        assert cycle.sample_rate == 8000
        np.testing.assert_array_equal(cycle.samples, [0.5])

    def test_one_second_length(self, write_wav):
        path = write_wav("one.wav", (_tone(200, 8000, 8000) * 1000).astype(np.int16), 8000)
        assert len(load_cycle(path)) == 8000

    def test_cycle_id_defaults_to_stem(self, write_wav):
        path = write_wav("c17.wav", np.array([5, -5, 7], dtype=np.int16))
        assert load_cycle(path).cycle_id == "c17"

    def test_silent_rejected(self, write_wav):
        path = write_wav("silent.wav", np.zeros(100, dtype=np.int16))
        with pytest.raises(SilentCycleError):
            load_cycle(path)

    def test_stereo_rejected(self, write_wav):
        path = write_wav("stereo.wav", np.ones((100, 2), dtype=np.int16))
        with pytest.raises(NotMonoError):
            load_cycle(path)

    def test_24_bit_rejected(self, write_wav):
        path = write_wav("deep.wav", _tone(100, 8000, 400) * 0.5, subtype="PCM_24")
        with pytest.raises(UnsupportedEncodingError):
            load_cycle(path)

    def test_garbage_file(self, tmp_path):
        path = tmp_path / "junk.wav"
        path.write_text("not a wav file", encoding="utf-8")
        with pytest.raises(UnreadableAudioError):
            load_cycle(path)

    def test_rate_below_expected(self, write_wav):
        path = write_wav("low.wav", np.array([1, 2, 3], dtype=np.int16), 2000)
        with pytest.raises(UpsampleError):
            load_cycle(path, expected_rate=4000)

    def test_save_load(self, tmp_path):
        x = _tone(300, 8000, 800) * 0.5
        path = save_cycle(AudioCycle(x, 8000), tmp_path / "t.wav")
        back = load_cycle(path)
        np.testing.assert_allclose(back.samples, x, atol=1.0 / 32768)


class TestResample:
    def test_halving_length(self):
        cycle = AudioCycle(_tone(300, 8000, 16000), 8000)
        out = resample(cycle, 4000)
        assert out.sample_rate == 4000
        assert len(out) == 8000

    def test_same_rate_is_identity(self):
        cycle = AudioCycle(_tone(300, 8000, 1000), 8000)
        assert resample(cycle, 8000) is cycle

    def test_tone_survives(self):
        out = resample(AudioCycle(_tone(500, 8000, 16000), 8000), 4000)
        spectrum = np.abs(np.fft.rfft(out.samples))
        freqs = np.fft.rfftfreq(len(out), 1 / 4000)
        assert abs(freqs[np.argmax(spectrum)] - 500) <= freqs[1]

    def test_rational_ratio(self):
        out = resample(AudioCycle(_tone(300, 11025, 11025), 11025), 4000)
        assert len(out) == 4000

    def test_upsampling_rejected(self):
        with pytest.raises(UpsampleError):
            resample(AudioCycle(np.ones(10), 4000), 8000)


class TestNormalize:
    def test_scale_by_peak(self):
        out = normalize_amplitude(AudioCycle(np.array([0.2, -0.4]), 4000))
        np.testing.assert_allclose(out.samples, [0.5, -1.0])

    def test_idempotent(self, rng):
        once = normalize_amplitude(AudioCycle(rng.standard_normal(500), 4000))
        twice = normalize_amplitude(once)
        np.testing.assert_array_equal(once.samples, twice.samples)
        assert np.max(np.abs(once.samples)) == 1.0

    def test_scale_invariant(self, rng):
        x = rng.standard_normal(500)
        a = normalize_amplitude(AudioCycle(x, 4000))
        b = normalize_amplitude(AudioCycle(7.5 * x, 4000))
        np.testing.assert_allclose(a.samples, b.samples, rtol=1e-12)

    def test_all_zero_rejected(self):
        with pytest.raises(SilentCycleError):
            normalize_amplitude(AudioCycle(np.zeros(10), 4000))


def _write_manifest(path, rows):
    lines = ["path,label,subject_id,cycle_id"] + [",".join(r) for r in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


@pytest.fixture
def wav_files(write_wav):
    return [write_wav(f"c{i}.wav", (_tone(200 + 10 * i, 8000, 800) * 8000).astype(np.int16))
            for i in range(4)]


class TestManifest:
    def test_counts_and_relative_paths(self, tmp_path, wav_files):
        path = _write_manifest(tmp_path / "m.csv", [
            ("c0.wav", "normal", "s1", "a"), ("c1.wav", "normal", "s1", "b"),
            ("c2.wav", "wheeze", "s2", "c"), ("c3.wav", "1", "s3", "d"),
        ])
        m = load_manifest(path)
        assert len(m) == 4
        assert m.counts == {NORMAL: 2, ABNORMAL: 2}
        assert m.subjects == ["s1", "s2", "s3"]
        assert m.entries[0].path == wav_files[0].resolve()

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("", encoding="utf-8")
        with pytest.raises(EmptyManifestError):
            load_manifest(path)

    def test_header_only(self, tmp_path):
        with pytest.raises(EmptyManifestError):
            load_manifest(_write_manifest(tmp_path / "h.csv", []))

    def test_wrong_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("file,label,subject,cycle\nx.wav,0,s,c\n", encoding="utf-8")
        with pytest.raises(ManifestHeaderError):
            load_manifest(path)

    def test_unknown_label_names_row(self, tmp_path, wav_files):
        path = _write_manifest(tmp_path / "m.csv", [
            ("c0.wav", "normal", "s1", "a"), ("c1.wav", "rhonchus", "s2", "b"),
        ])
        with pytest.raises(UnknownLabelError, match="row 3"):
            load_manifest(path)

    def test_duplicate_cycle(self, tmp_path, wav_files):
        path = _write_manifest(tmp_path / "m.csv", [
            ("c0.wav", "0", "s1", "a"), ("c1.wav", "0", "s1", "a"),
        ])
        with pytest.raises(DuplicateCycleError):
            load_manifest(path)

    def test_conflicting_subject_labels(self, tmp_path, wav_files):
        path = _write_manifest(tmp_path / "m.csv", [
            ("c0.wav", "0", "s1", "a"), ("c1.wav", "crackle", "s1", "b"),
        ])
        with pytest.raises(ConflictingLabelError):
            load_manifest(path)

    def test_missing_file(self, tmp_path):
        path = _write_manifest(tmp_path / "m.csv", [("nowhere.wav", "0", "s1", "a")])
        with pytest.raises(MissingFileError):
            load_manifest(path)
        assert len(load_manifest(path, check_files=False)) == 1

    def test_save_then_load_is_identity(self, tmp_path, wav_files):
        path = _write_manifest(tmp_path / "m.csv", [
            ("c0.wav", "normal", "s1", "a"), ("c2.wav", "wheeze", "s2", "c"),
            ("c3.wav", "crackle", "s3", "d"),
        ])
        first = load_manifest(path)
        save_manifest(first, tmp_path / "sub" / "m.csv")
        again = load_manifest(tmp_path / "sub" / "m.csv")
        assert again.entries == first.entries

    def test_direct_construction_validates(self, tmp_path):
        e = ManifestEntry(tmp_path / "x.wav", 0, "s", "c")
        with pytest.raises(DuplicateCycleError):
            DatasetManifest("m", [e, e])


class TestPrepare:
    def test_chain(self, write_wav):
        path = write_wav("p.wav", (_tone(300, 8000, 8000) * 3000).astype(np.int16), 8000)
        entry = ManifestEntry(path, ABNORMAL, "s", "p")
        cycle = prepare_cycle(entry, 4000)
        assert cycle.sample_rate == 4000
        assert len(cycle) == 4000
        assert np.max(np.abs(cycle.samples)) == 1.0
        assert cycle.label == ABNORMAL

import numpy as np
import pytest
from scipy import signal, stats

from src.core.audio_io import ABNORMAL, NORMAL, load_cycle
from src.core.errors import ConfigError
from src.synth.generator import PEAK, SynthSpec, generate, generate_dataset


def _band_peak_ratio(x, rate, lo=200.0, hi=800.0):
    f, pxx = signal.welch(x, fs=rate, nperseg=1024)
    band = (f >= lo) & (f <= hi)
    return pxx[band].max() / np.median(pxx[band])


def _high_band_kurtosis(x, rate, cutoff=600.0):
    sos = signal.butter(4, cutoff, btype="high", fs=rate, output="sos")
    return stats.kurtosis(signal.sosfiltfilt(sos, x), fisher=False)


class TestGenerate:
    def test_deterministic(self):
        spec = SynthSpec("crackle", 2.0, seed=5)
        np.testing.assert_array_equal(generate(spec).samples, generate(spec).samples)

    def test_classes_differ_for_same_seed(self):
        a = generate(SynthSpec("normal", 2.0, seed=5)).samples
        b = generate(SynthSpec("wheeze", 2.0, seed=5)).samples
        assert not np.array_equal(a, b)

    def test_length_peak_label(self):
        cycle = generate(SynthSpec("wheeze", 1.5, seed=1), rate=8000)
        assert len(cycle) == 12000
        assert np.max(np.abs(cycle.samples)) == pytest.approx(PEAK)
        assert cycle.label == ABNORMAL
        assert generate(SynthSpec("normal", 1.5)).label == NORMAL

    def test_wheeze_is_tonal(self):
        hits = sum(_band_peak_ratio(generate(SynthSpec("wheeze", 2.0, seed=s)).samples, 8000) > 10
                   for s in range(100))
        assert hits >= 95

    def test_crackle_is_impulsive(self):
        hits = sum(_high_band_kurtosis(generate(SynthSpec("crackle", 2.0, seed=s)).samples, 8000) > 6
                   for s in range(100))
        assert hits >= 95

    def test_bad_spec(self):
        with pytest.raises(ConfigError):
            SynthSpec("rhonchus")
        with pytest.raises(ConfigError):
            SynthSpec("normal", 0.2)
        with pytest.raises(ConfigError):
            generate(SynthSpec("normal"), rate=2000)


class TestDataset:
    def test_flat_shape(self, tmp_path):
        m = generate_dataset(3, 11, tmp_path)
        assert len(m) == 9
        assert m.counts == {NORMAL: 3, ABNORMAL: 6}
        assert len(m.subjects) == 9
        assert (tmp_path / "manifest.csv").is_file()
        cycle = load_cycle(m.entries[0].path)
        assert cycle.sample_rate == 8000
        assert 1.5 <= cycle.duration <= 3.0

    def test_grouped_shape(self, tmp_path):
        m = generate_dataset(2, 11, tmp_path, grouped=True)
        assert len(m) == 20
        assert len(m.subjects) == 4
        assert m.counts == {NORMAL: 10, ABNORMAL: 10}

    def test_reproducible_files(self, tmp_path):
        a = generate_dataset(2, 3, tmp_path / "a")
        b = generate_dataset(2, 3, tmp_path / "b")
        for ea, eb in zip(a.entries, b.entries):
            assert ea.cycle_id == eb.cycle_id
            assert ea.path.read_bytes() == eb.path.read_bytes()

    def test_reference_corpus_shape(self, db1_corpus):
        assert len(db1_corpus) == 72
        assert db1_corpus.counts == {NORMAL: 24, ABNORMAL: 48}

import numpy as np
import pytest
import soundfile as sf

from src.core.audio_io import AudioCycle
from src.synth.generator import generate_dataset


@pytest.fixture
def write_wav(tmp_path):
    """write_wav(name, samples, rate, subtype="PCM_16") -> path. Integer arrays are written as-is."""
    def _write(name, samples, rate=8000, subtype="PCM_16"):
        path = tmp_path / name
        sf.write(str(path), np.asarray(samples), rate, subtype=subtype, format="WAV")
        return path
    return _write


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def noise_cycle():
    x = np.random.default_rng(5).standard_normal(8000)
    return AudioCycle(x / np.max(np.abs(x)), 4000, 0, "s0", "noise")


@pytest.fixture(scope="session")
def small_corpus(tmp_path_factory):
    """3 normal + 3 wheeze + 3 crackle cycles at 8 kHz."""
    return generate_dataset(3, 7, tmp_path_factory.mktemp("small_corpus"))


@pytest.fixture(scope="session")
def db1_corpus(tmp_path_factory):
    """24 normal, 24 wheeze, 24 crackle cycles, seed 42."""
    return generate_dataset(24, 42, tmp_path_factory.mktemp("db1"))

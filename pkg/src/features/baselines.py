"""
Lungtex Baselines — Reference feature extractors for the comparison harness
db8 wavelet statistics (27) · MFCC mean · MFSC mean · Morphological (4)
"""

import logging
from dataclasses import dataclass

import numpy as np
import pywt
from scipy import stats
from scipy.spatial import cKDTree

from src.core.audio_io import AudioCycle
from src.core.errors import BaselineError
from src.features.spectral import FrameConfig, MelFilterbank, mfcc_from_mfsc, mfsc

logger = logging.getLogger(__name__)

WAVELET = "db8"
WAVELET_LEVELS = 6
WAVELET_MODE = "symmetric"
RATIO_FLOOR = 1e-12

LACUNARITY_BOX = 50
SAMPEN_M = 2
SAMPEN_R = 0.2
MIN_MORPH_SAMPLES = 100
ZERO_VARIANCE_RTOL = 1e-12

FIXED_LENGTHS = {"wavelet27": 27, "morph": 4}


@dataclass(frozen=True, eq=False)
class BaselineFeature:
    kind: str
    values: np.ndarray

    def __post_init__(self):
        want = FIXED_LENGTHS.get(self.kind)
        if want is not None and self.values.size != want:
            raise BaselineError(f"{self.kind} feature must have {want} values, got {self.values.size}")

    def __len__(self) -> int:
        return self.values.size


# ── Wavelet ─────────────────────────────────────────────────────

def wavelet_subbands(x: np.ndarray, levels: int = WAVELET_LEVELS) -> list:
    """DWT subbands ordered fine -> coarse: [D1, D2, ..., D_levels, A_levels]."""
    filter_len = pywt.Wavelet(WAVELET).dec_len
    if pywt.dwt_max_level(x.size, filter_len) < levels:
        raise BaselineError(
            f"{x.size} samples is too short for a {levels}-level {WAVELET} decomposition")
    coeffs = pywt.wavedec(x, WAVELET, mode=WAVELET_MODE, level=levels)
    return list(reversed(coeffs[1:])) + [coeffs[0]]


def wavelet_feature(cycle: AudioCycle) -> BaselineFeature:
    """[mean |c| (7), std (7), mean c^2 (7), adjacent mean ratios (6)] over db8 subbands."""
    bands = wavelet_subbands(cycle.samples)
    means = np.array([np.mean(np.abs(b)) for b in bands])
    stds = np.array([np.std(b) for b in bands])
    powers = np.array([np.mean(b ** 2) for b in bands])
    ratios = means[:-1] / np.maximum(means[1:], RATIO_FLOOR)
    return BaselineFeature("wavelet27", np.concatenate([means, stds, powers, ratios]))


# ── Cepstral / spectral means ───────────────────────────────────

def mfcc_mean_feature(cycle: AudioCycle, config: FrameConfig, bank: MelFilterbank,
                      n_coeffs: int = 20) -> BaselineFeature:
    m = mfsc(cycle, config, bank)
    n = min(n_coeffs, m.n_filters)
    return BaselineFeature("mfcc-mean", mfcc_from_mfsc(m, n).mean(axis=1))


def mfsc_mean_feature(cycle: AudioCycle, config: FrameConfig, bank: MelFilterbank) -> BaselineFeature:
    return BaselineFeature("mfsc-mean", mfsc(cycle, config, bank).values.mean(axis=1))


# ── Morphological ───────────────────────────────────────────────

def lacunarity(x: np.ndarray, box: int = LACUNARITY_BOX) -> float:
    """Gliding-box lacunarity of the amplitude mass |x|: var/mean^2 + 1 of box sums."""
    mass = np.abs(np.asarray(x, dtype=np.float64))
    if mass.size < box:
        raise BaselineError(f"lacunarity box of {box} exceeds {mass.size} samples")
    sums = np.convolve(mass, np.ones(box), mode="valid")
    mu = sums.mean()
    if mu == 0:
        raise BaselineError("lacunarity undefined on a silent signal")
    return float(sums.var() / mu ** 2 + 1.0)


def sample_entropy(x: np.ndarray, m: int = SAMPEN_M, r_factor: float = SAMPEN_R) -> float:
    """-ln(A/B): B counts template pairs of length m within Chebyshev distance r,
    A the same for length m+1; self-matches excluded, r = r_factor * std(x)."""
    x = np.asarray(x, dtype=np.float64)
    r = r_factor * np.std(x)
    n = x.size - m
    if n < 2:
        raise BaselineError(f"sample entropy needs more than {m + 1} samples")

    def _pairs(length: int) -> int:
        templates = np.lib.stride_tricks.sliding_window_view(x, length)[:n]
        tree = cKDTree(templates)
        # count_neighbors includes the n self-pairs and counts each pair twice
        return (int(tree.count_neighbors(tree, r, p=np.inf)) - n) // 2

    b, a = _pairs(m), _pairs(m + 1)
    if a == 0 or b == 0:
        # no matches at all: report the largest value the estimator can take
        return float(np.log(n * (n - 1) / 2.0))
    return float(-np.log(a / b))


def morphological_feature(cycle: AudioCycle, box: int = LACUNARITY_BOX, m: int = SAMPEN_M,
                          r_factor: float = SAMPEN_R) -> BaselineFeature:
    """[kurtosis, skewness, lacunarity, sample entropy] of the time-domain cycle."""
    x = cycle.samples
    if x.size < MIN_MORPH_SAMPLES:
        raise BaselineError(f"cycle {cycle.cycle_id!r}: morphological features need >= "
                            f"{MIN_MORPH_SAMPLES} samples, got {x.size}")
    if np.ptp(x) == 0 or np.std(x) <= ZERO_VARIANCE_RTOL * max(1.0, float(np.max(np.abs(x)))):
        raise BaselineError(f"cycle {cycle.cycle_id!r}: zero variance")
    values = np.array([
        stats.kurtosis(x, fisher=False),
        stats.skew(x),
        lacunarity(x, box),
        sample_entropy(x, m, r_factor),
    ])
    return BaselineFeature("morph", values)

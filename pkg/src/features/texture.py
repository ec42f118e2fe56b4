"""
Lungtex Texture — Uniform local binary patterns over the MFSC image
LBP(8,1) codes · Uniform-58 table · Textrogram · Per-filter normalized histograms
"""

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from src.core.audio_io import AudioCycle
from src.core.errors import TextureError
from src.features.spectral import FrameConfig, MelFilterbank, MfscMatrix, mfsc

logger = logging.getLogger(__name__)

N_UNIFORM = 58
NON_UNIFORM = -1

# Neighbour p -> (filter offset, frame offset). p=0 is east (next frame) and the
# walk goes counter-clockwise with higher filters drawn upwards.
NEIGHBOR_OFFSETS = (
    (0, 1), (1, 1), (1, 0), (1, -1),
    (0, -1), (-1, -1), (-1, 0), (-1, 1),
)


@dataclass(frozen=True)
class LbpParams:
    p: int = 8
    r: int = 1

    def __post_init__(self):
        if (self.p, self.r) != (8, 1):
            raise TextureError(f"only LBP(8,1) is supported, got P={self.p}, R={self.r}")


# ── Codes ───────────────────────────────────────────────────────

def lbp_code(center: float, neighbors) -> int:
    """sum_p S(i_p - i_c) 2^p with S(x) = 1 iff x >= 0."""
    neighbors = list(neighbors)
    if len(neighbors) != 8:
        raise TextureError(f"expected 8 neighbours, got {len(neighbors)}")
    return sum(1 << p for p, v in enumerate(neighbors) if v - center >= 0)


def circular_transitions(pattern: int, bits: int = 8) -> int:
    return sum(((pattern >> i) & 1) != ((pattern >> ((i + 1) % bits)) & 1) for i in range(bits))


@dataclass(frozen=True, eq=False)
class UniformTable:
    code_to_bin: np.ndarray     # 256 entries, bin in 0..57 or NON_UNIFORM

    @property
    def n_uniform(self) -> int:
        return int(np.count_nonzero(self.code_to_bin >= 0))

    def bin_of(self, pattern: int) -> int:
        return int(self.code_to_bin[pattern])

    def pattern_of(self, bin_index: int) -> int:
        return int(np.flatnonzero(self.code_to_bin == bin_index)[0])


@lru_cache(maxsize=None)
def build_uniform_table() -> UniformTable:
    table = np.full(256, NON_UNIFORM, dtype=np.int16)
    next_bin = 0
    for pattern in range(256):
        if circular_transitions(pattern) <= 2:
            table[pattern] = next_bin
            next_bin += 1
    table.setflags(write=False)
    return UniformTable(table)


# ── Textrogram ──────────────────────────────────────────────────

@dataclass(frozen=True, eq=False)
class Textrogram:
    codes: np.ndarray           # (Q-2) x (T-2) bins or NON_UNIFORM
    source_config: Optional[FrameConfig] = None

    @property
    def n_rows(self) -> int:
        return self.codes.shape[0]


def lbp_codes(values: np.ndarray) -> np.ndarray:
    """Raw 8-bit patterns of every interior pixel of a 2-D array."""
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 2 or v.shape[0] < 3 or v.shape[1] < 3:
        raise TextureError(f"LBP needs at least a 3x3 matrix, got shape {v.shape}")
    q, t = v.shape
    center = v[1:-1, 1:-1]
    codes = np.zeros(center.shape, dtype=np.uint8)
    for p, (df, dt) in enumerate(NEIGHBOR_OFFSETS):
        neighbor = v[1 + df:q - 1 + df, 1 + dt:t - 1 + dt]
        codes |= ((neighbor - center) >= 0).astype(np.uint8) << p
    return codes


def textrogram(m: MfscMatrix, params: LbpParams = LbpParams(),
               table: Optional[UniformTable] = None) -> Textrogram:
    table = table or build_uniform_table()
    codes = lbp_codes(m.values)
    return Textrogram(table.code_to_bin[codes], m.config)


# ── Histogram feature ───────────────────────────────────────────

@dataclass(frozen=True, eq=False)
class LbpFeature:
    values: np.ndarray              # (Q-2) * 58
    counts_per_filter: np.ndarray   # uniform codes per textrogram row

    @property
    def n_blocks(self) -> int:
        return self.counts_per_filter.size

    @property
    def empty_filters(self) -> list:
        """Filter numbers (2..Q-1) whose row held no uniform code."""
        return [i + 2 for i in np.flatnonzero(self.counts_per_filter == 0)]

    def blocks(self) -> np.ndarray:
        return self.values.reshape(self.n_blocks, N_UNIFORM)

    def __len__(self) -> int:
        return self.values.size


def featurize(t: Textrogram) -> LbpFeature:
    """Per filter row: 58-bin histogram of uniform codes, L1-normalized; rows concatenated
    in ascending filter order. Non-uniform pixels are ignored."""
    rows = t.codes
    hist = np.zeros((rows.shape[0], N_UNIFORM), dtype=np.float64)
    for i, row in enumerate(rows):
        hist[i] = np.bincount(row[row >= 0], minlength=N_UNIFORM)
    counts = hist.sum(axis=1)
    nonzero = counts > 0
    hist[nonzero] /= counts[nonzero, None]
    if not nonzero.all():
        logger.warning("%d textrogram rows held no uniform pattern; their blocks are zero",
                       int((~nonzero).sum()))
    return LbpFeature(hist.ravel(), counts.astype(np.int64))


def extract_lbp_feature(cycle: AudioCycle, config: FrameConfig, bank: MelFilterbank,
                        params: LbpParams = LbpParams(),
                        table: Optional[UniformTable] = None) -> LbpFeature:
    return featurize(textrogram(mfsc(cycle, config, bank), params, table))


def feature_dimension(n_filters: int) -> int:
    return (n_filters - 2) * N_UNIFORM


def filter_of_index(index: int) -> int:
    """Feature coordinate -> filter number of the textrogram row it came from."""
    return index // N_UNIFORM + 2


def class_mean_surface(features: np.ndarray, labels: np.ndarray, n_filters: int) -> dict:
    """Average LBP feature of each class as a (Q-2) x 58 surface."""
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels)
    if features.shape[1] != feature_dimension(n_filters):
        raise TextureError(
            f"features have {features.shape[1]} columns, expected {feature_dimension(n_filters)}")
    return {
        int(c): features[labels == c].mean(axis=0).reshape(n_filters - 2, N_UNIFORM)
        for c in np.unique(labels)
    }

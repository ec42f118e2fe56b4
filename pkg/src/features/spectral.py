"""
Lungtex Spectral — Short-term analysis of lung-sound cycles
Framing · Hamming window · Power spectrum · Mel filterbank · MFSC · MFCC
"""

import logging
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import librosa
import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import fft as sp_fft

from src.core.audio_io import AudioCycle
from src.core.errors import ConfigError, CycleTooShortError, FilterbankError, SpectralError

logger = logging.getLogger(__name__)

LOG_FLOOR = 1e-10
MAX_FFT = 1 << 16


def fft_size_for(frame_len: int) -> int:
    """Smallest power of two >= frame_len."""
    n = 1
    while n < frame_len:
        n <<= 1
    return n


# ── Frame configuration ─────────────────────────────────────────

@dataclass(frozen=True)
class FrameConfig:
    frame_len_ms: float = 20.0
    overlap_pct: float = 50.0
    n_fft: Optional[int] = None     # None: smallest power of two >= frame length
    window: str = "hamming"

    def __post_init__(self):
        if self.frame_len_ms <= 0:
            raise ConfigError(f"frame length must be positive, got {self.frame_len_ms} ms")
        if not 0 <= self.overlap_pct <= 95:
            raise ConfigError(f"overlap must lie in [0, 95] %, got {self.overlap_pct}")
        if self.window != "hamming":
            raise ConfigError(f"unsupported window '{self.window}'")
        if self.n_fft is not None and (self.n_fft < 1 or self.n_fft & (self.n_fft - 1)):
            raise ConfigError(f"n_fft must be a power of two, got {self.n_fft}")

    def frame_length(self, rate: int) -> int:
        return int(round(self.frame_len_ms * rate / 1000.0))

    def hop(self, rate: int) -> int:
        hop = int(round(self.frame_length(rate) * (1.0 - self.overlap_pct / 100.0)))
        if hop < 1:
            raise ConfigError(
                f"{self.frame_len_ms} ms at {self.overlap_pct} % overlap leaves a hop below one sample")
        return hop

    def fft_size(self, rate: int) -> int:
        frame_len = self.frame_length(rate)
        n_fft = self.n_fft or fft_size_for(frame_len)
        if n_fft < frame_len:
            raise ConfigError(f"n_fft {n_fft} is shorter than the frame ({frame_len} samples)")
        return n_fft

    def with_fft(self, n_fft: int) -> "FrameConfig":
        return FrameConfig(self.frame_len_ms, self.overlap_pct, n_fft, self.window)

    def n_frames(self, n_samples: int, rate: int) -> int:
        frame_len = self.frame_length(rate)
        if n_samples < frame_len:
            return 0
        return (n_samples - frame_len) // self.hop(rate) + 1


def hamming(length: int) -> np.ndarray:
    """w(n) = 0.54 - 0.46 cos(2 pi n / (L - 1)), symmetric."""
    return np.hamming(length)


def frame_signal(cycle: AudioCycle, config: FrameConfig) -> np.ndarray:
    """T x L_w windowed frames; the trailing partial frame is dropped."""
    rate = cycle.sample_rate
    frame_len, hop = config.frame_length(rate), config.hop(rate)
    if frame_len < 2:
        raise ConfigError(f"{config.frame_len_ms} ms at {rate} Hz is shorter than two samples")
    if cycle.samples.size < frame_len:
        raise CycleTooShortError(
            f"cycle {cycle.cycle_id!r}: {cycle.samples.size} samples is shorter than one "
            f"{frame_len}-sample frame")
    frames = sliding_window_view(cycle.samples, frame_len)[::hop]
    return frames * hamming(frame_len)


def power_spectrum(frame: np.ndarray, n_fft: int) -> np.ndarray:
    """|Y(k)|^2 over the n_fft/2+1 one-sided bins; works row-wise on a frame stack."""
    frame = np.asarray(frame, dtype=np.float64)
    if frame.shape[-1] > n_fft:
        raise SpectralError(f"frame of {frame.shape[-1]} samples does not fit n_fft={n_fft}")
    spec = sp_fft.rfft(frame, n=n_fft, axis=-1)
    return spec.real ** 2 + spec.imag ** 2


# ── Mel filterbank ──────────────────────────────────────────────

def mel_scale(f):
    f = np.asarray(f, dtype=np.float64)
    if np.any(f < 0):
        raise SpectralError("mel_scale: negative frequency")
    out = np.asarray(librosa.hz_to_mel(f, htk=True), dtype=np.float64)
    return float(out) if out.ndim == 0 else out


def mel_to_hz(m):
    out = np.asarray(librosa.mel_to_hz(np.asarray(m, dtype=np.float64), htk=True), dtype=np.float64)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class MelFilterbank:
    n_filters: int
    responses: np.ndarray      # Q x (n_fft/2 + 1), psi_i(k)
    sample_rate: int
    n_fft: int
    f_low: float
    f_high: float
    apex_hz: np.ndarray = field(repr=False, default=None)

    @property
    def n_bins(self) -> int:
        return self.responses.shape[1]


def build_filterbank(n_filters: int, sample_rate: int, n_fft: int,
                     f_low: float = 0.0, f_high: Optional[float] = None) -> MelFilterbank:
    f_high = sample_rate / 2.0 if f_high is None else float(f_high)
    if n_filters < 3:
        raise FilterbankError(f"need at least 3 filters, got {n_filters}")
    if not 0 <= f_low < f_high <= sample_rate / 2.0:
        raise FilterbankError(f"need 0 <= f_low < f_high <= {sample_rate / 2} Hz, got {f_low}..{f_high}")

    # Q apexes equally spaced in HTK mel, plus the two band edges; unnormalized triangles
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)      # empty filters are reported below
        responses = librosa.filters.mel(sr=sample_rate, n_fft=n_fft, n_mels=n_filters, fmin=f_low,
                                        fmax=f_high, htk=True, norm=None, dtype=np.float64)
    edges = librosa.mel_frequencies(n_mels=n_filters + 2, fmin=f_low, fmax=f_high, htk=True)

    empty = np.flatnonzero(~np.any(responses > 0, axis=1))
    if empty.size:
        raise FilterbankError(
            f"{empty.size} of {n_filters} filters cover no FFT bin (n_fft={n_fft} is too small "
            f"for {n_filters} filters at {sample_rate} Hz)")
    responses.setflags(write=False)
    apex_hz = edges[1:-1].copy()
    apex_hz.setflags(write=False)
    return MelFilterbank(n_filters, responses, sample_rate, n_fft, float(f_low), f_high, apex_hz)


def filterbank_for(config: FrameConfig, rate: int, n_filters: int,
                   f_low: float = 0.0, f_high: Optional[float] = None):
    """Build the bank for a frame config; dense banks get a larger (zero-padded) FFT.
    Returns (config with the n_fft actually used, bank)."""
    n_fft = config.fft_size(rate)
    while True:
        try:
            bank = build_filterbank(n_filters, rate, n_fft, f_low, f_high)
            break
        except FilterbankError:
            if n_fft >= MAX_FFT:
                raise
            n_fft *= 2
    if n_fft != config.fft_size(rate):
        logger.warning("n_fft raised from %d to %d so every one of %d filters covers a bin",
                       config.fft_size(rate), n_fft, n_filters)
    return config.with_fft(n_fft), bank


# ── MFSC / MFCC ─────────────────────────────────────────────────

@dataclass(frozen=True, eq=False)
class MfscMatrix:
    values: np.ndarray          # Q x T log filterbank energies
    frame_times: np.ndarray     # T frame centres (s)
    config: FrameConfig
    sample_rate: int = 0

    @property
    def n_filters(self) -> int:
        return self.values.shape[0]

    @property
    def n_frames(self) -> int:
        return self.values.shape[1]


def mfsc(cycle: AudioCycle, config: FrameConfig, bank: MelFilterbank) -> MfscMatrix:
    rate = cycle.sample_rate
    n_fft = config.fft_size(rate)
    if bank.sample_rate != rate or bank.n_fft != n_fft:
        raise ConfigError(
            f"filterbank built for {bank.sample_rate} Hz / n_fft={bank.n_fft}, "
            f"cycle needs {rate} Hz / n_fft={n_fft}")
    frames = frame_signal(cycle, config)
    energies = power_spectrum(frames, n_fft) @ bank.responses.T      # T x Q
    values = np.log(np.maximum(energies, LOG_FLOOR)).T
    frame_len, hop = config.frame_length(rate), config.hop(rate)
    times = (np.arange(values.shape[1]) * hop + frame_len / 2.0) / rate
    return MfscMatrix(np.ascontiguousarray(values), times, config, rate)


def mfcc_from_mfsc(m: MfscMatrix, n_coeffs: int) -> np.ndarray:
    """Orthonormal DCT-II down each frame column; the first n_coeffs rows (c0 included)."""
    if not 1 <= n_coeffs <= m.n_filters:
        raise SpectralError(f"n_coeffs must lie in 1..{m.n_filters}, got {n_coeffs}")
    return sp_fft.dct(m.values, type=2, norm="ortho", axis=0)[:n_coeffs]


# ── Dump format ─────────────────────────────────────────────────

def save_mfsc(m: MfscMatrix, path) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    header = (f"q={m.n_filters},t={m.n_frames},frame_ms={m.config.frame_len_ms},"
              f"overlap_pct={m.config.overlap_pct},n_fft={m.config.fft_size(m.sample_rate)},"
              f"rate={m.sample_rate}")
    np.savetxt(p, m.values, delimiter=",", fmt="%.17g", header=header, comments="# ")
    return p


def load_mfsc(path) -> MfscMatrix:
    p = Path(path)
    with open(p, "r", encoding="utf-8") as f:
        first = f.readline()
    if not first.startswith("#"):
        raise SpectralError(f"{p}: missing MFSC header line")
    meta = dict(kv.split("=", 1) for kv in first.lstrip("# ").strip().split(","))
    values = np.loadtxt(p, delimiter=",", comments="#", ndmin=2)
    q, t = int(meta["q"]), int(meta["t"])
    if values.shape != (q, t):
        raise SpectralError(f"{p}: header says {q}x{t}, body is {values.shape[0]}x{values.shape[1]}")
    rate = int(meta["rate"])
    config = FrameConfig(float(meta["frame_ms"]), float(meta["overlap_pct"]), int(meta["n_fft"]))
    frame_len, hop = config.frame_length(rate), config.hop(rate)
    times = (np.arange(t) * hop + frame_len / 2.0) / rate
    return MfscMatrix(values, times, config, rate)

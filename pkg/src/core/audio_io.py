"""
Lungtex Audio I/O — Segmented lung-sound cycles and dataset manifests
WAV loading · Anti-aliased down-sampling · Amplitude normalization · Manifest CSV
"""

import logging
import math
import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd
import soundfile as sf
from scipy import signal

from src.core.errors import (
    ConflictingLabelError, DuplicateCycleError, EmptyManifestError, ManifestHeaderError,
    MissingFileError, NotMonoError, SilentCycleError, UnreadableAudioError,
    UnknownLabelError, UnsupportedEncodingError, UpsampleError,
)

logger = logging.getLogger(__name__)

PCM_SCALE = 32768.0
ANTI_ALIAS_TAPS = 63
MANIFEST_COLUMNS = ["path", "label", "subject_id", "cycle_id"]

NORMAL, ABNORMAL = 0, 1
LABEL_TOKENS = {
    "0": NORMAL, "normal": NORMAL,
    "1": ABNORMAL, "abnormal": ABNORMAL,
    "wheeze": ABNORMAL, "crackle": ABNORMAL,
}


# ── Cycles ──────────────────────────────────────────────────────

@dataclass(frozen=True, eq=False)
class AudioCycle:
    """One respiration cycle: samples y(n) at sample_rate, with its class and origin."""
    samples: np.ndarray
    sample_rate: int
    label: int = NORMAL
    subject_id: str = ""
    cycle_id: str = ""

    def __post_init__(self):
        x = np.asarray(self.samples, dtype=np.float64)
        if x.ndim != 1 or x.size == 0:
            raise SilentCycleError(f"cycle {self.cycle_id!r}: samples must be a non-empty 1-D array")
        if self.sample_rate <= 0:
            raise UnreadableAudioError(f"cycle {self.cycle_id!r}: sample rate must be positive")
        object.__setattr__(self, "samples", x)

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate

    def __len__(self) -> int:
        return self.samples.size


def load_cycle(path, expected_rate: Optional[int] = None, label: int = NORMAL,
               subject_id: str = "", cycle_id: str = "") -> AudioCycle:
    """Read a 16-bit PCM mono WAV. Samples are scaled to [-1, 1) by 1/32768.
    expected_rate, when given, is the lowest acceptable rate (no up-sampling later)."""
    p = Path(path)
    try:
        info = sf.info(str(p))
    except (RuntimeError, OSError) as e:
        raise UnreadableAudioError(f"cannot read {p}: {e}") from e
    if info.channels != 1:
        raise NotMonoError(f"{p}: expected mono, found {info.channels} channels")
    if info.format != "WAV" or info.subtype != "PCM_16":
        raise UnsupportedEncodingError(f"{p}: expected 16-bit PCM WAV, found {info.format}/{info.subtype}")
    try:
        raw, rate = sf.read(str(p), dtype="int16", always_2d=False)
    except (RuntimeError, OSError) as e:
        raise UnreadableAudioError(f"cannot decode {p}: {e}") from e
    if raw.size == 0 or not np.any(raw):
        raise SilentCycleError(f"{p}: silent cycle")
    if expected_rate is not None and rate < expected_rate:
        raise UpsampleError(f"{p}: sample rate {rate} Hz is below the required {expected_rate} Hz")
    samples = raw.astype(np.float64) / PCM_SCALE
    logger.debug("loaded %s: %d samples at %d Hz", p.name, samples.size, rate)
    return AudioCycle(samples, int(rate), label, subject_id, cycle_id or p.stem)


def save_cycle(cycle: AudioCycle, path) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    pcm = np.clip(np.round(cycle.samples * 32767.0), -32768, 32767).astype(np.int16)
    sf.write(str(p), pcm, cycle.sample_rate, subtype="PCM_16", format="WAV")
    return p


# ── Preprocessing ───────────────────────────────────────────────

def anti_alias_taps(source_rate: int, target_rate: int, up: int = 1) -> np.ndarray:
    """Linear-phase Hamming-windowed sinc low-pass, cutoff 0.9 x the new Nyquist,
    designed at the interpolated rate source_rate * up with unity DC gain.
    Length grows with up so the filter spans ANTI_ALIAS_TAPS source samples."""
    cutoff = 0.9 * target_rate / 2.0
    numtaps = ANTI_ALIAS_TAPS * up
    if numtaps % 2 == 0:
        numtaps += 1
    return signal.firwin(numtaps, cutoff, window="hamming", fs=source_rate * up)


def resample(cycle: AudioCycle, target_rate: int) -> AudioCycle:
    if target_rate == cycle.sample_rate:
        return cycle
    if target_rate > cycle.sample_rate:
        raise UpsampleError(
            f"cycle {cycle.cycle_id!r}: up-sampling {cycle.sample_rate} -> {target_rate} Hz is not supported")
    g = math.gcd(cycle.sample_rate, target_rate)
    up, down = target_rate // g, cycle.sample_rate // g
    taps = anti_alias_taps(cycle.sample_rate, target_rate, up)
    y = signal.resample_poly(cycle.samples, up, down, window=taps)
    n_out = int(round(cycle.samples.size * target_rate / cycle.sample_rate))
    y = y[:n_out]
    if y.size < n_out:
        y = np.pad(y, (0, n_out - y.size))
    return replace(cycle, samples=y, sample_rate=target_rate)


def normalize_amplitude(cycle: AudioCycle) -> AudioCycle:
    peak = float(np.max(np.abs(cycle.samples)))
    if peak == 0.0:
        raise SilentCycleError(f"cycle {cycle.cycle_id!r}: silent cycle cannot be normalized")
    return replace(cycle, samples=cycle.samples / peak)


# ── Manifests ───────────────────────────────────────────────────

@dataclass(frozen=True)
class ManifestEntry:
    path: Path
    label: int
    subject_id: str
    cycle_id: str
    label_name: str = ""

    @property
    def token(self) -> str:
        return self.label_name or ("abnormal" if self.label == ABNORMAL else "normal")


@dataclass
class DatasetManifest:
    name: str
    entries: list = field(default_factory=list)

    def __post_init__(self):
        self.validate()

    def validate(self):
        seen, subject_label = set(), {}
        for e in self.entries:
            if e.cycle_id in seen:
                raise DuplicateCycleError(f"manifest {self.name}: duplicate cycle_id '{e.cycle_id}'")
            seen.add(e.cycle_id)
            prev = subject_label.setdefault(e.subject_id, e.label)
            if prev != e.label:
                raise ConflictingLabelError(
                    f"manifest {self.name}: subject '{e.subject_id}' appears with labels {prev} and {e.label}")

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    @property
    def counts(self) -> dict:
        out = {NORMAL: 0, ABNORMAL: 0}
        for e in self.entries:
            out[e.label] = out.get(e.label, 0) + 1
        return out

    @property
    def subjects(self) -> list:
        """Subject ids in order of first appearance."""
        return list(dict.fromkeys(e.subject_id for e in self.entries))



def parse_label(token: str, row: int) -> int:
    key = str(token).strip().lower()
    if key not in LABEL_TOKENS:
        raise UnknownLabelError(f"row {row}: unknown label token '{token}'")
    return LABEL_TOKENS[key]


def load_manifest(path, check_files: bool = True) -> DatasetManifest:
    p = Path(path)
    if not p.exists():
        raise MissingFileError(f"manifest not found: {p}")
    try:
        df = pd.read_csv(p, dtype=str, keep_default_na=False, encoding="utf-8")
    except pd.errors.EmptyDataError as e:
        raise EmptyManifestError(f"{p}: empty manifest") from e
    if list(df.columns) != MANIFEST_COLUMNS:
        raise ManifestHeaderError(
            f"{p}: header must be exactly '{','.join(MANIFEST_COLUMNS)}', got '{','.join(df.columns)}'")
    if df.empty:
        raise EmptyManifestError(f"{p}: empty manifest")

    base = p.resolve().parent
    entries = []
    # row numbers are 1-based file lines; the header is line 1
    for i, rec in enumerate(df.itertuples(index=False), start=2):
        label = parse_label(rec.label, i)
        fp = Path(rec.path)
        fp = (fp if fp.is_absolute() else base / fp).resolve()
        if check_files and not fp.is_file():
            raise MissingFileError(f"row {i}: audio file not found: {fp}")
        entries.append(ManifestEntry(fp, label, rec.subject_id.strip(), rec.cycle_id.strip(),
                                     rec.label.strip().lower()))
    manifest = DatasetManifest(p.stem, entries)
    logger.info("manifest %s: %d cycles, %d subjects, counts %s",
                manifest.name, len(manifest), len(manifest.subjects), manifest.counts)
    return manifest


def save_manifest(manifest: DatasetManifest, path) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    base = p.resolve().parent
    rows = []
    for e in manifest.entries:
        try:
            rel = os.path.relpath(e.path, base)
        except ValueError:  # different drive on Windows
            rel = str(e.path)
        rows.append([Path(rel).as_posix(), e.token, e.subject_id, e.cycle_id])
    pd.DataFrame(rows, columns=MANIFEST_COLUMNS).to_csv(p, index=False, encoding="utf-8", lineterminator="\n")
    return p


def prepare_cycle(entry: ManifestEntry, rate: int) -> AudioCycle:
    """load -> down-sample -> per-cycle amplitude normalization."""
    cycle = load_cycle(entry.path, expected_rate=rate, label=entry.label,
                       subject_id=entry.subject_id, cycle_id=entry.cycle_id)
    return normalize_amplitude(resample(cycle, rate))

"""
Lungtex Extract — Manifest to feature table
Per-cycle preprocessing + feature kind dispatch · worker pool · features CSV
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd
from tqdm import tqdm

from src.classify.models import LabeledSet, to_signed
from src.core.audio_io import AudioCycle, DatasetManifest, ManifestEntry, prepare_cycle
from src.core.config import RunConfig
from src.core.errors import ExtractionError, FeatureTableError, LungtexError
from src.core.log import progress_enabled
from src.features.baselines import (
    mfcc_mean_feature, mfsc_mean_feature, morphological_feature, wavelet_feature,
)
from src.features.spectral import FrameConfig, MelFilterbank, filterbank_for
from src.features.texture import build_uniform_table, extract_lbp_feature

logger = logging.getLogger(__name__)

META_COLUMNS = ["cycle_id", "label", "subject_id"]
MFCC_COEFFS = 20


@dataclass(frozen=True, eq=False)
class FeatureTable:
    ids: tuple              # cycle ids, sorted
    labels: np.ndarray      # 0 normal / 1 abnormal
    subject_ids: tuple
    matrix: np.ndarray      # one row per cycle
    kind: str
    n_filters: int = 0

    def __post_init__(self):
        if self.matrix.ndim != 2 or self.matrix.shape[0] != len(self.ids):
            raise FeatureTableError(
                f"feature matrix {self.matrix.shape} does not match {len(self.ids)} cycle ids")
        if len(self.subject_ids) != len(self.ids) or self.labels.size != len(self.ids):
            raise FeatureTableError("ids, labels and subject ids must have equal length")

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    def labeled(self, rows=None, cols=None) -> LabeledSet:
        rows = np.arange(len(self)) if rows is None else np.asarray(rows)
        X = self.matrix[rows]
        if cols is not None:
            X = X[:, np.asarray(cols)]
        return LabeledSet(X, to_signed(self.labels[rows]), tuple(self.ids[i] for i in rows))

    def rows_of(self, cycle_ids) -> np.ndarray:
        index = {c: i for i, c in enumerate(self.ids)}
        missing = [c for c in cycle_ids if c not in index]
        if missing:
            raise FeatureTableError(f"cycle ids not in feature table: {', '.join(missing[:5])}")
        return np.array([index[c] for c in cycle_ids], dtype=np.int64)


# ── Per-cycle features ──────────────────────────────────────────

def frame_setup(config: RunConfig) -> tuple:
    """(FrameConfig with the n_fft in use, MelFilterbank) for a run."""
    return filterbank_for(FrameConfig(config.frame_ms, config.overlap_pct), config.rate, config.n_filters)


def cycle_feature(cycle: AudioCycle, kind: str, frame: FrameConfig, bank: MelFilterbank) -> np.ndarray:
    if kind == "lbp":
        return extract_lbp_feature(cycle, frame, bank, table=build_uniform_table()).values
    if kind == "wavelet27":
        return wavelet_feature(cycle).values
    if kind == "mfcc-mean":
        return mfcc_mean_feature(cycle, frame, bank, MFCC_COEFFS).values
    if kind == "mfsc-mean":
        return mfsc_mean_feature(cycle, frame, bank).values
    if kind == "morph":
        return morphological_feature(cycle).values
    raise LungtexError(f"unknown feature kind '{kind}'")


def extract_features(manifest: DatasetManifest, config: RunConfig, jobs: int = 1) -> FeatureTable:
    """Prepare and featurize every cycle; rows come back sorted by cycle_id.
    Failures are collected per cycle and raised together."""
    frame, bank = frame_setup(config)
    entries = sorted(manifest.entries, key=lambda e: e.cycle_id)

    def _one(entry: ManifestEntry):
        try:
            cycle = prepare_cycle(entry, config.rate)
            return entry, cycle_feature(cycle, config.feature, frame, bank), None
        except LungtexError as e:
            return entry, None, e

    show = progress_enabled(logging.getLogger().getEffectiveLevel())
    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        results = list(tqdm(pool.map(_one, entries), total=len(entries),
                            desc=f"extract {config.feature}", disable=not show))

    failures = {}
    for entry, _, err in results:
        if err is not None:
            logger.error("cycle %s (%s): %s", entry.cycle_id, entry.path, err)
            failures[entry.cycle_id] = err
    if failures:
        raise ExtractionError(failures)

    matrix = np.vstack([vec for _, vec, _ in results])
    table = FeatureTable(
        tuple(e.cycle_id for e in entries),
        np.array([e.label for e in entries], dtype=np.int64),
        tuple(e.subject_id for e in entries),
        matrix, config.feature, config.n_filters,
    )
    logger.info("extracted %s features: %d cycles x %d dims", table.kind, len(table), table.dim)
    return table


# ── Features CSV ────────────────────────────────────────────────

def feature_columns(dim: int) -> list:
    return [f"f{i:04d}" for i in range(dim)]


def save_features(table: FeatureTable, path) -> Path:
    """`# kind=..,n_filters=..` line, then cycle_id,label,subject_id,f0000,... rows."""
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    df = pd.DataFrame(table.matrix, columns=feature_columns(table.dim))
    df.insert(0, "subject_id", list(table.subject_ids))
    df.insert(0, "label", table.labels)
    df.insert(0, "cycle_id", list(table.ids))
    with open(p, "w", encoding="utf-8", newline="") as f:
        f.write(f"# kind={table.kind},n_filters={table.n_filters}\n")
        df.to_csv(f, index=False, float_format="%.17g", lineterminator="\n")
    logger.info("features written to %s", p)
    return p


def _parse_header(line: str, p: Path) -> dict:
    if not line.startswith("#"):
        raise FeatureTableError(f"{p}: missing '# kind=...' header line")
    meta = {}
    for part in line.lstrip("#").strip().split(","):
        key, sep, value = part.partition("=")
        if not sep:
            raise FeatureTableError(f"{p}: malformed header field '{part}'")
        meta[key.strip()] = value.strip()
    if "kind" not in meta:
        raise FeatureTableError(f"{p}: header has no kind")
    return meta


def load_features(path) -> FeatureTable:
    p = Path(path)
    try:
        with open(p, encoding="utf-8") as f:
            meta = _parse_header(f.readline(), p)
        df = pd.read_csv(p, skiprows=1, dtype={"cycle_id": str, "subject_id": str},
                         keep_default_na=False, encoding="utf-8")
    except OSError as e:
        raise FeatureTableError(f"cannot read features {p}: {e}") from e
    if list(df.columns[:3]) != META_COLUMNS:
        raise FeatureTableError(f"{p}: first columns must be {','.join(META_COLUMNS)}")
    if df.empty:
        raise FeatureTableError(f"{p}: no feature rows")
    matrix = df.iloc[:, 3:].to_numpy(dtype=np.float64)
    return FeatureTable(tuple(df["cycle_id"]), df["label"].to_numpy(dtype=np.int64),
                        tuple(df["subject_id"]), matrix, meta["kind"], int(meta.get("n_filters", 0)))

"""
Lungtex PlotData — Series generators for re-plotting results
Pure logic — emits tables, never renders
"""

import logging
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd

from src.analysis.evaluate import METRIC_COLUMNS
from src.analysis.selection import SelectionResult
from src.core.errors import LungtexError
from src.features.extract import FeatureTable
from src.features.texture import N_UNIFORM, class_mean_surface

logger = logging.getLogger(__name__)

PLOT_KINDS = ("sweep", "selection", "lbp-surface", "filter-counts")
CLASS_NAMES = {0: "normal", 1: "abnormal"}


# ── Loading ─────────────────────────────────────────────────────

def load_table(filepath) -> pd.DataFrame:
    path = Path(filepath)
    try:
        return pd.read_csv(path, encoding="utf-8")
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise LungtexError(f"cannot read table {path}: {e}") from e


def _require(df: pd.DataFrame, columns: list, what: str):
    missing = [c for c in columns if c not in df.columns]
    if missing:
        raise LungtexError(f"{what} table lacks column(s): {', '.join(missing)}")


# ── Series ──────────────────────────────────────────────────────

def sweep_series(df: pd.DataFrame) -> pd.DataFrame:
    """(x, SPE, SEN, OAA) with x the swept parameter (first column)."""
    _require(df, METRIC_COLUMNS, "sweep")
    x = df.columns[0]
    out = df[[x] + METRIC_COLUMNS].rename(columns={x: "x"}).sort_values("x", kind="stable")
    out.attrs["parameter"] = x
    return out.reset_index(drop=True)


def selection_series(df: pd.DataFrame) -> pd.DataFrame:
    """(n_selected, OAA) from a selection sweep."""
    _require(df, ["n_selected", "oaa"], "selection sweep")
    return df[["n_selected", "oaa"]].sort_values("n_selected", kind="stable").reset_index(drop=True)


def lbp_surface_series(table: FeatureTable) -> pd.DataFrame:
    """Class-mean LBP histograms in long form: class, filter, bin, value."""
    if table.kind != "lbp":
        raise LungtexError(f"an LBP surface needs lbp features, got '{table.kind}'")
    surfaces = class_mean_surface(table.matrix, table.labels, table.n_filters)
    frames = []
    for cls, surface in surfaces.items():
        filters, bins = np.meshgrid(np.arange(2, table.n_filters), np.arange(N_UNIFORM), indexing="ij")
        frames.append(pd.DataFrame({
            "class": CLASS_NAMES.get(cls, str(cls)),
            "filter": filters.ravel(),
            "bin": bins.ravel(),
            "value": surface.ravel(),
        }))
    return pd.concat(frames, ignore_index=True)


def filter_count_series(result: SelectionResult) -> pd.DataFrame:
    """Selected-feature count per filter (filters 2..Q-1)."""
    if not result.n_filters:
        raise LungtexError("selection was not made over LBP features; no per-filter counts")
    return pd.DataFrame({
        "filter": np.arange(2, result.n_filters),
        "count": np.asarray(result.per_filter_counts, dtype=np.int64),
    })


def best_point(df: pd.DataFrame, x: str, y: str = "oaa") -> Optional[dict]:
    """Row with the highest y; the first such row wins, None when every y is undefined."""
    _require(df, [x, y], "series")
    scored = df.dropna(subset=[y])
    if scored.empty:
        return None
    row = scored.loc[scored[y].idxmax()]
    return {x: row[x].item() if hasattr(row[x], "item") else row[x], y: float(row[y])}


def write_series(df: pd.DataFrame, path) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(p, index=False, encoding="utf-8", lineterminator="\n")
    logger.info("series (%d rows) written to %s", len(df), p)
    return p

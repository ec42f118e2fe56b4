"""
Lungtex Evaluate — Leave-one-out evaluation harness
Fold plans · SPE / SEN / OAA · parameter sweeps · selection sweeps · k tuning · comparison grid
"""

import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd
from tqdm import tqdm

from src.analysis.selection import SelectionResult, discretize, mrmr_select
from src.classify.models import ClassifierSpec, predict, train
from src.core.audio_io import DatasetManifest
from src.core.config import FEATURES, HISTOGRAM_KERNELS, NON_NEGATIVE_FEATURES, RunConfig
from src.core.errors import ConfigError, FoldError, LungtexError, PlanError
from src.core.log import progress_enabled
from src.features.extract import FeatureTable, extract_features

logger = logging.getLogger(__name__)

SWEEP_PARAMETERS = ("frame_ms", "overlap_pct", "n_filters")
METRIC_COLUMNS = ["spe", "sen", "oaa"]


# ── Fold plans ──────────────────────────────────────────────────

@dataclass(frozen=True)
class Fold:
    fold_id: str
    train_ids: tuple
    test_ids: tuple


@dataclass(frozen=True)
class FoldPlan:
    granularity: str
    folds: tuple

    def __len__(self) -> int:
        return len(self.folds)

    def __iter__(self):
        return iter(self.folds)


def build_plan(ids, labels, subjects, granularity: str) -> FoldPlan:
    """One fold per cycle, or per subject with all of that subject's cycles held out."""
    ids, subjects = list(ids), list(subjects)
    labels = np.asarray(labels)
    if granularity == "cycle":
        groups = {c: [c] for c in ids}
    elif granularity == "subject":
        groups = {}
        for c, s in zip(ids, subjects):
            groups.setdefault(s, []).append(c)
        if len(groups) < 2:
            raise PlanError(f"subject-level LOOCV needs at least 2 subjects, got {len(groups)}")
    else:
        raise PlanError(f"unknown granularity '{granularity}'")
    if len(ids) < 2:
        raise PlanError("LOOCV needs at least 2 cycles")

    label_of = dict(zip(ids, labels.tolist()))
    folds = []
    for fold_id, test in groups.items():
        held = set(test)
        train_ids = tuple(c for c in ids if c not in held)
        if len({label_of[c] for c in train_ids}) < 2:
            raise PlanError(f"fold {fold_id}: training set holds only one class")
        folds.append(Fold(str(fold_id), train_ids, tuple(test)))
    return FoldPlan(granularity, tuple(folds))


def plan_loocv(manifest: DatasetManifest, granularity: str) -> FoldPlan:
    entries = sorted(manifest.entries, key=lambda e: e.cycle_id)
    plan = build_plan([e.cycle_id for e in entries], [e.label for e in entries],
                      [e.subject_id for e in entries], granularity)
    logger.info("%s-level LOOCV over %d cycles: %d folds", granularity, len(entries), len(plan))
    return plan


def plan_for_table(table: FeatureTable, granularity: str) -> FoldPlan:
    return build_plan(table.ids, table.labels, table.subject_ids, granularity)


# ── Metrics ─────────────────────────────────────────────────────

def _pct(num: int, den: int) -> float:
    return 100.0 * num / den if den else math.nan


@dataclass(frozen=True)
class Confusion:
    """Abnormal is the positive class."""
    tp: int = 0
    tn: int = 0
    fp: int = 0
    fn: int = 0

    def __add__(self, other: "Confusion") -> "Confusion":
        return Confusion(self.tp + other.tp, self.tn + other.tn, self.fp + other.fp, self.fn + other.fn)

    @property
    def n_normal(self) -> int:
        return self.tn + self.fp

    @property
    def n_abnormal(self) -> int:
        return self.tp + self.fn

    @property
    def total(self) -> int:
        return self.n_normal + self.n_abnormal

    @property
    def spe(self) -> float:
        return _pct(self.tn, self.n_normal)

    @property
    def sen(self) -> float:
        return _pct(self.tp, self.n_abnormal)

    @property
    def oaa(self) -> float:
        return _pct(self.tp + self.tn, self.total)

    def metrics(self) -> dict:
        return {"spe": self.spe, "sen": self.sen, "oaa": self.oaa}


def compute_metrics(y_true, y_pred) -> Confusion:
    """Labels may be {0, 1} or {-1, +1}; anything > 0 is abnormal."""
    t = np.asarray(y_true) > 0
    p = np.asarray(y_pred) > 0
    if t.shape != p.shape:
        raise LungtexError(f"{t.size} true labels but {p.size} predictions")
    return Confusion(int(np.sum(t & p)), int(np.sum(~t & ~p)), int(np.sum(~t & p)), int(np.sum(t & ~p)))


# ── Reports ─────────────────────────────────────────────────────

@dataclass(frozen=True)
class FoldPrediction:
    fold_id: str
    cycle_id: str
    repeat: int
    label: int          # 0 / 1
    predicted: int      # 0 / 1
    score: float


@dataclass(frozen=True)
class EvalReport:
    confusion: Confusion
    config: RunConfig
    per_fold: tuple = ()
    repeats: int = 1
    granularity: str = "cycle"
    feature_dim: int = 0
    selected: tuple = field(default=())

    @property
    def spe(self) -> float:
        return self.confusion.spe

    @property
    def sen(self) -> float:
        return self.confusion.sen

    @property
    def oaa(self) -> float:
        return self.confusion.oaa

    def to_dict(self) -> dict:
        def _num(v):
            return None if v is None or math.isnan(v) else v
        return {
            "spe": _num(self.spe),
            "sen": _num(self.sen),
            "oaa": _num(self.oaa),
            "confusion": asdict(self.confusion),
            "n_normal": self.confusion.n_normal // self.repeats,
            "n_abnormal": self.confusion.n_abnormal // self.repeats,
            "repeats": self.repeats,
            "granularity": self.granularity,
            "feature_dim": self.feature_dim,
            "selected": list(self.selected),
            "per_fold": [asdict(p) for p in self.per_fold],
            "config": self.config.to_dict(),
            "fingerprint": self.config.fingerprint(),
        }


def save_report(report: EvalReport, path) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(json.dumps(report.to_dict(), ensure_ascii=False, indent=2), encoding="utf-8")
    logger.info("report written to %s (OAA %.2f)", p, report.oaa)
    return p


def load_report(path) -> EvalReport:
    p = Path(path)
    try:
        data = json.loads(p.read_text(encoding="utf-8"))
        return EvalReport(
            Confusion(**data["confusion"]),
            RunConfig.from_dict(data["config"]),
            tuple(FoldPrediction(**f) for f in data.get("per_fold", ())),
            int(data.get("repeats", 1)),
            data.get("granularity", "cycle"),
            int(data.get("feature_dim", 0)),
            tuple(data.get("selected", ())),
        )
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError, AttributeError) as e:
        raise LungtexError(f"cannot read report {p}: {e}") from e


# ── Fold loop ───────────────────────────────────────────────────

def fold_selection(table: FeatureTable, train_rows: np.ndarray, config: RunConfig,
                   count: int) -> SelectionResult:
    """mRMR on training rows only; thresholds never see the held-out cycles."""
    disc = discretize(table.matrix[train_rows], config.sigma)
    n_filters = table.n_filters if table.kind == "lbp" else None
    return mrmr_select(disc, table.labels[train_rows], count, config.scheme, n_filters)


def _check_table(table: FeatureTable, config: RunConfig):
    if table.kind != config.feature:
        raise ConfigError(f"feature table holds '{table.kind}' features but the config asks for '{config.feature}'")


def _run_tasks(fn, tasks: list, jobs: int, desc: str) -> list:
    show = progress_enabled(logging.getLogger().getEffectiveLevel())
    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        return list(tqdm(pool.map(fn, tasks), total=len(tasks), desc=desc, disable=not show))


def evaluate_features(table: FeatureTable, config: RunConfig, plan: Optional[FoldPlan] = None,
                      jobs: int = 1) -> EvalReport:
    """Train and test every fold (and every seed for the MLP) on precomputed features."""
    _check_table(table, config)
    plan = plan or plan_for_table(table, config.granularity)
    repeats = config.effective_repeats

    def _fold(task) -> list:
        repeat, fold = task
        try:
            train_rows = table.rows_of(fold.train_ids)
            test_rows = table.rows_of(fold.test_ids)
            cols = None
            if config.select_count:
                cols = list(fold_selection(table, train_rows, config, config.select_count).selected)
            model = train(table.labeled(train_rows, cols),
                          ClassifierSpec.from_config(config, seed=config.seed + repeat))
            X = table.matrix[test_rows] if cols is None else table.matrix[test_rows][:, cols]
            labels, scores = predict(model, X)
        except LungtexError as e:
            raise FoldError(fold.fold_id, e) from e
        logger.debug("fold %s (repeat %d): %d test cycles", fold.fold_id, repeat, len(test_rows))
        return [FoldPrediction(fold.fold_id, table.ids[r], repeat, int(table.labels[r]),
                               int(lab > 0), float(s))
                for r, lab, s in zip(test_rows, labels, scores)]

    tasks = [(r, fold) for r in range(repeats) for fold in plan]
    results = _run_tasks(_fold, tasks, jobs, f"LOOCV {config.classifier}")
    per_fold = tuple(p for chunk in results for p in chunk)
    confusion = compute_metrics([p.label for p in per_fold], [p.predicted for p in per_fold])

    selected = ()
    if config.select_count:
        all_rows = np.arange(len(table))
        selected = fold_selection(table, all_rows, config, config.select_count).selected
    dim = config.select_count or table.dim
    report = EvalReport(confusion, config, per_fold, repeats, plan.granularity, dim, selected)
    logger.info("%s + %s (%s): SPE %.2f  SEN %.2f  OAA %.2f",
                config.feature, config.classifier, config.kernel, report.spe, report.sen, report.oaa)
    return report


def run_eval(manifest: DatasetManifest, config: RunConfig, plan: Optional[FoldPlan] = None,
             jobs: int = 1) -> EvalReport:
    plan = plan or plan_loocv(manifest, config.granularity)
    table = extract_features(manifest, config, jobs)
    return evaluate_features(table, config, plan, jobs)


# ── Sweeps ──────────────────────────────────────────────────────

def sweep(manifest: DatasetManifest, config: RunConfig, parameter: str, values,
          jobs: int = 1) -> list:
    """One full run_eval per value, every other knob held fixed. Returns [(value, report)]."""
    if parameter not in SWEEP_PARAMETERS:
        raise ConfigError(f"cannot sweep '{parameter}' (choose from {', '.join(SWEEP_PARAMETERS)})")
    values = list(values)
    if not values:
        raise ConfigError("sweep needs at least one value")
    plan = plan_loocv(manifest, config.granularity)
    rows = []
    for v in values:
        v = int(v) if parameter == "n_filters" else float(v)
        cfg = config.with_overrides(**{parameter: v})
        logger.info("sweep %s = %s", parameter, v)
        rows.append((v, run_eval(manifest, cfg, plan, jobs)))
    return rows


def sweep_table(parameter: str, rows: list) -> pd.DataFrame:
    return pd.DataFrame(
        [{parameter: v, "spe": r.spe, "sen": r.sen, "oaa": r.oaa} for v, r in rows],
        columns=[parameter] + METRIC_COLUMNS,
    )


def selection_sweep(table: FeatureTable, config: RunConfig, counts, plan: Optional[FoldPlan] = None,
                    jobs: int = 1) -> pd.DataFrame:
    """Accuracy against selected-feature count. Each fold selects once for the largest
    count on its training rows; smaller counts use prefixes of that ranking."""
    _check_table(table, config)
    counts = sorted({int(c) for c in counts})
    if not counts or counts[0] < 1 or counts[-1] > table.dim:
        raise ConfigError(f"selection counts must lie in [1, {table.dim}]")
    plan = plan or plan_for_table(table, config.granularity)
    top = counts[-1]

    def _fold(task) -> dict:
        repeat, fold = task
        try:
            train_rows = table.rows_of(fold.train_ids)
            test_rows = table.rows_of(fold.test_ids)
            ranking = list(fold_selection(table, train_rows, config, top).selected)
            spec = ClassifierSpec.from_config(config, seed=config.seed + repeat)
            out = {}
            for c in counts:
                cols = ranking[:c]
                model = train(table.labeled(train_rows, cols), spec)
                pred, _ = predict(model, table.matrix[test_rows][:, cols])
                out[c] = compute_metrics(table.labels[test_rows], pred)
            return out
        except LungtexError as e:
            raise FoldError(fold.fold_id, e) from e

    tasks = [(r, fold) for r in range(config.effective_repeats) for fold in plan]
    totals = {c: Confusion() for c in counts}
    for part in _run_tasks(_fold, tasks, jobs, "selection sweep"):
        for c, conf in part.items():
            totals[c] = totals[c] + conf
    return pd.DataFrame(
        [{"n_selected": c, **totals[c].metrics()} for c in counts],
        columns=["n_selected"] + METRIC_COLUMNS,
    )


def tune_k(table: FeatureTable, config: RunConfig, candidates=(1, 3, 5, 7, 9, 11),
           plan: Optional[FoldPlan] = None, jobs: int = 1) -> pd.DataFrame:
    """kNN LOOCV accuracy per odd k."""
    plan = plan or plan_for_table(table, config.granularity)
    smallest = min(len(f.train_ids) for f in plan)
    rows = []
    for k in sorted(set(int(k) for k in candidates)):
        if k > smallest:
            logger.warning("k=%d skipped: the smallest training fold has %d cycles", k, smallest)
            continue
        report = evaluate_features(table, config.with_overrides(classifier="knn", k=k), plan, jobs)
        rows.append({"k": k, **report.confusion.metrics()})
    if not rows:
        raise ConfigError("no candidate k fits the training folds")
    return pd.DataFrame(rows, columns=["k"] + METRIC_COLUMNS)


def best_k(table: pd.DataFrame) -> int:
    """Highest OAA; the smallest k wins a tie."""
    return int(table.loc[table["oaa"].idxmax(), "k"])


# ── Comparison grid ─────────────────────────────────────────────

def comparison_grid(base: RunConfig, features=FEATURES) -> list:
    """Every feature with kNN, MLP and each SVM kernel it supports."""
    configs = []
    for feature in features:
        configs.append(base.with_overrides(feature=feature, classifier="knn"))
        if feature in NON_NEGATIVE_FEATURES:
            kernels = sorted(HISTOGRAM_KERNELS) + ["linear"]
        else:
            kernels = ["linear", "rbf"]
        for kernel in kernels:
            configs.append(base.with_overrides(feature=feature, classifier="svm", kernel=kernel))
        configs.append(base.with_overrides(feature=feature, classifier="mlp"))
    return configs


def compare(manifest: DatasetManifest, configs: list, jobs: int = 1) -> pd.DataFrame:
    """One LOOCV row per configuration; features are extracted once per front-end setting."""
    tables, plans, rows = {}, {}, []
    for cfg in configs:
        key = (cfg.feature, cfg.rate, cfg.frame_ms, cfg.overlap_pct, cfg.n_filters)
        if key not in tables:
            tables[key] = extract_features(manifest, cfg, jobs)
        if cfg.granularity not in plans:
            plans[cfg.granularity] = plan_loocv(manifest, cfg.granularity)
        report = evaluate_features(tables[key], cfg, plans[cfg.granularity], jobs)
        rows.append({
            "feature": cfg.feature,
            "classifier": cfg.classifier,
            "kernel": cfg.kernel if cfg.classifier == "svm" else "",
            **report.confusion.metrics(),
            "fingerprint": cfg.fingerprint(),
        })
    return pd.DataFrame(rows, columns=["feature", "classifier", "kernel"] + METRIC_COLUMNS + ["fingerprint"])

"""
Lungtex Selection — mRMR feature selection over discretized features
Three-state coding · plug-in mutual information · greedy MID / MIQ · per-filter counts
"""

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from src.core.errors import SelectionError
from src.features.texture import N_UNIFORM, feature_dimension, filter_of_index

logger = logging.getLogger(__name__)

STATES = (-1, 0, 1)
MIQ_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class DiscretizedSet:
    states: np.ndarray      # M x d in {-1, 0, +1}
    means: np.ndarray
    stds: np.ndarray        # population std per feature
    sigma: float = 1.0

    @property
    def dim(self) -> int:
        return self.states.shape[1]


@dataclass(frozen=True)
class SelectionResult:
    selected: tuple                     # feature indices, pick order
    scores: tuple                       # greedy objective at each pick
    per_filter_counts: tuple = ()       # filters 2..Q-1; empty when the feature is not LBP-shaped
    scheme: str = "mid"
    sigma: float = 1.0
    n_filters: int = 0

    def __len__(self) -> int:
        return len(self.selected)

    def prefix(self, count: int) -> "SelectionResult":
        sel = self.selected[:count]
        counts = tuple(per_filter_counts(sel, self.n_filters)) if self.n_filters else ()
        return SelectionResult(sel, self.scores[:count], counts, self.scheme, self.sigma, self.n_filters)

    def to_dict(self) -> dict:
        return {
            "selected": list(self.selected),
            "scores": list(self.scores),
            "per_filter_counts": {str(f): c for f, c in
                                  zip(range(2, self.n_filters), self.per_filter_counts)},
            "scheme": self.scheme,
            "sigma": self.sigma,
            "n_filters": self.n_filters,
        }


# ── Discretization ──────────────────────────────────────────────

def discretize(X: np.ndarray, sigma: float = 1.0) -> DiscretizedSet:
    """+1 above mean + sigma*std, -1 below mean - sigma*std, 0 between.
    Zero-variance features are all 0."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] < 1:
        raise SelectionError("nothing to discretize: zero features")
    if sigma < 0:
        raise SelectionError(f"sigma must be >= 0, got {sigma}")
    means = X.mean(axis=0)
    stds = X.std(axis=0)
    return DiscretizedSet(apply_thresholds(X, means, stds, sigma), means, stds, float(sigma))


def apply_thresholds(X: np.ndarray, means: np.ndarray, stds: np.ndarray, sigma: float) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    states = np.zeros(X.shape, dtype=np.int8)
    states[X > means + sigma * stds] = 1
    states[X < means - sigma * stds] = -1
    states[:, stds == 0] = 0
    return states


# ── Mutual information ──────────────────────────────────────────

def _entropy_terms(joint: np.ndarray, n: int) -> float:
    p = joint / n
    px = p.sum(axis=1, keepdims=True)
    py = p.sum(axis=0, keepdims=True)
    nz = p > 0
    return float(np.sum(p[nz] * np.log(p[nz] / (px @ py)[nz])))


def mutual_information(a, b) -> float:
    """Plug-in I(a; b) in nats from the empirical joint frequencies."""
    a, b = np.asarray(a).ravel(), np.asarray(b).ravel()
    if a.size != b.size:
        raise SelectionError(f"columns differ in length: {a.size} vs {b.size}")
    if a.size == 0:
        return 0.0
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    joint = np.zeros((ai.max() + 1, bi.max() + 1))
    np.add.at(joint, (ai, bi), 1.0)
    return max(_entropy_terms(joint, a.size), 0.0)


def one_hot_states(states: np.ndarray) -> np.ndarray:
    """M x (3d) indicator matrix, column 3j + s+1 marks state s of feature j."""
    M, d = states.shape
    onehot = np.zeros((M, d, len(STATES)))
    onehot[np.arange(M)[:, None], np.arange(d)[None, :], states.astype(np.int64) + 1] = 1.0
    return onehot.reshape(M, d * len(STATES))


def mi_against(onehot: np.ndarray, column) -> np.ndarray:
    """I(f_j; column) for every feature j at once, from an indicator matrix."""
    M = onehot.shape[0]
    _, ci = np.unique(np.asarray(column).ravel(), return_inverse=True)
    target = np.zeros((M, ci.max() + 1))
    target[np.arange(M), ci] = 1.0
    joint = (onehot.T @ target).reshape(-1, len(STATES), target.shape[1]) / M   # d x 3 x k
    pf = joint.sum(axis=2, keepdims=True)
    pc = joint.sum(axis=1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(joint > 0, joint * np.log(joint / (pf * pc)), 0.0)
    return np.maximum(terms.sum(axis=(1, 2)), 0.0)


# ── mRMR ────────────────────────────────────────────────────────

def mrmr_select(data: DiscretizedSet, labels, count: int, scheme: str = "mid",
                n_filters: Optional[int] = None) -> SelectionResult:
    """Greedy mRMR. First pick maximizes I(f; c); each later pick maximizes
    I(f; c) - mean_s I(f; s) (mid) or I(f; c) / mean_s I(f; s) (miq).
    Equal scores go to the lower feature index."""
    d = data.dim
    if not 1 <= count <= d:
        raise SelectionError(f"count must lie in [1, {d}], got {count}")
    if scheme not in ("mid", "miq"):
        raise SelectionError(f"unknown mRMR scheme '{scheme}'")
    labels = np.asarray(labels).ravel()
    if labels.size != data.states.shape[0]:
        raise SelectionError(f"{labels.size} labels for {data.states.shape[0]} rows")

    onehot = one_hot_states(data.states)
    relevance = mi_against(onehot, labels)
    redundancy_sum = np.zeros(d)
    chosen = np.zeros(d, dtype=bool)
    selected, scores = [], []

    for step in range(count):
        if step == 0:
            objective = relevance.copy()
        else:
            mean_red = redundancy_sum / step
            if scheme == "mid":
                objective = relevance - mean_red
            else:
                objective = relevance / np.maximum(mean_red, MIQ_FLOOR)
        objective[chosen] = -np.inf
        pick = int(np.argmax(objective))
        selected.append(pick)
        scores.append(float(objective[pick]))
        chosen[pick] = True
        if step + 1 < count:
            redundancy_sum += mi_against(onehot, data.states[:, pick])

    if n_filters is None and d % N_UNIFORM == 0:
        n_filters = d // N_UNIFORM + 2
    counts = ()
    if n_filters and feature_dimension(n_filters) == d:
        counts = tuple(per_filter_counts(selected, n_filters))
    else:
        n_filters = 0
    logger.debug("mRMR (%s) picked %d of %d features", scheme, count, d)
    return SelectionResult(tuple(selected), tuple(scores), counts, scheme, data.sigma, n_filters or 0)


def per_filter_counts(selected, n_filters: int) -> list:
    """Selected indices per 58-wide block; entry i belongs to filter i + 2."""
    limit = feature_dimension(n_filters)
    counts = [0] * (n_filters - 2)
    for idx in selected:
        if not 0 <= idx < limit:
            raise SelectionError(f"feature index {idx} outside [0, {limit}) for {n_filters} filters")
        counts[filter_of_index(idx) - 2] += 1
    return counts


# ── Persistence ─────────────────────────────────────────────────

def save_selection(result: SelectionResult, path, extra: Optional[dict] = None) -> Path:
    data = result.to_dict()
    if extra:
        data.update(extra)
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(json.dumps(data, ensure_ascii=False, indent=2), encoding="utf-8")
    return p


def load_selection(path) -> SelectionResult:
    p = Path(path)
    try:
        data = json.loads(p.read_text(encoding="utf-8"))
        n_filters = int(data.get("n_filters", 0))
        counts = data.get("per_filter_counts", {})
        return SelectionResult(
            tuple(int(i) for i in data["selected"]),
            tuple(float(s) for s in data["scores"]),
            tuple(int(counts[str(f)]) for f in range(2, n_filters)) if n_filters else (),
            data.get("scheme", "mid"),
            float(data.get("sigma", 1.0)),
            n_filters,
        )
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError, AttributeError) as e:
        raise SelectionError(f"cannot read selection {p}: {e}") from e

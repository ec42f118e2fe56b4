"""
Lungtex Models — Labeled data, classifier dispatch, model persistence
kNN store · SVM · MLP behind one train / predict surface, JSON on disk
"""

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np

from src.classify.kernels import KernelSpec
from src.classify.knn import KnnModel, knn_fit, knn_scores
from src.classify.mlp import MlpModel, mlp_scores, mlp_train
from src.classify.svm import SvmModel, svm_decision, svm_train
from src.core.config import RunConfig
from src.core.errors import ClassifierError, ModelFormatError

logger = logging.getLogger(__name__)

TrainedModel = Union[KnnModel, SvmModel, MlpModel]

MODEL_FORMAT = 1


def to_signed(labels) -> np.ndarray:
    """Manifest labels {0, 1} -> classifier labels {-1, +1}."""
    return np.where(np.asarray(labels) > 0, 1, -1).astype(np.int64)


def from_signed(labels) -> np.ndarray:
    return (np.asarray(labels) > 0).astype(np.int64)


@dataclass(frozen=True, eq=False)
class LabeledSet:
    features: np.ndarray    # M x d
    labels: np.ndarray      # +1 abnormal / -1 normal
    ids: tuple = ()

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.features, dtype=np.float64))
        y = np.asarray(self.labels, dtype=np.int64)
        if X.shape[0] != y.size:
            raise ClassifierError(f"{X.shape[0]} feature rows but {y.size} labels")
        if not np.all(np.isin(y, (-1, 1))):
            raise ClassifierError("labels must be +1 or -1")
        if not np.all(np.isfinite(X)):
            raise ClassifierError("features contain NaN or infinite values")
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)
        ids = tuple(self.ids) if self.ids else tuple(str(i) for i in range(y.size))
        object.__setattr__(self, "ids", ids)

    def __len__(self) -> int:
        return self.labels.size

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    @property
    def has_both_classes(self) -> bool:
        return bool(np.any(self.labels > 0) and np.any(self.labels < 0))

    def take(self, rows) -> "LabeledSet":
        rows = np.asarray(rows)
        return LabeledSet(self.features[rows], self.labels[rows], tuple(self.ids[i] for i in rows))

    def columns(self, cols) -> "LabeledSet":
        return LabeledSet(self.features[:, np.asarray(cols)], self.labels, self.ids)


@dataclass(frozen=True)
class ClassifierSpec:
    kind: str = "svm"
    kernel: str = "bhat"
    k: int = 3
    c: float = 1.0
    gamma: Optional[float] = None
    epochs: int = 500
    seed: int = 0

    @classmethod
    def from_config(cls, config: RunConfig, seed: Optional[int] = None) -> "ClassifierSpec":
        return cls(config.classifier, config.kernel, config.k, config.c, config.gamma,
                   config.epochs, config.seed if seed is None else seed)

    @property
    def kernel_spec(self) -> KernelSpec:
        return KernelSpec(self.kernel, self.gamma)


# ── Dispatch ────────────────────────────────────────────────────

def train(data: LabeledSet, spec: ClassifierSpec) -> TrainedModel:
    if not data.has_both_classes:
        raise ClassifierError("training data must contain both classes")
    if spec.kind == "knn":
        return knn_fit(data.features, data.labels, data.ids, spec.k)
    if spec.kind == "svm":
        return svm_train(data.features, data.labels, spec.kernel_spec, spec.c)
    if spec.kind == "mlp":
        return mlp_train(data.features, data.labels, spec.epochs, spec.seed)
    raise ClassifierError(f"unknown classifier '{spec.kind}'")


def model_kind(model: TrainedModel) -> str:
    if isinstance(model, KnnModel):
        return "knn"
    if isinstance(model, SvmModel):
        return "svm"
    if isinstance(model, MlpModel):
        return "mlp"
    raise ClassifierError(f"not a trained model: {type(model).__name__}")


def decision_scores(model: TrainedModel, X) -> np.ndarray:
    """Raw per-row scores: vote sum (kNN), g(x) (SVM), o (MLP)."""
    kind = model_kind(model)
    if kind == "knn":
        return knn_scores(model, X)
    if kind == "svm":
        return svm_decision(model, X)
    return mlp_scores(model, X)


def predict(model: TrainedModel, X) -> tuple:
    """(labels in {+1, -1}, scores) for every row of X."""
    scores = decision_scores(model, X)
    threshold = 0.5 if model_kind(model) == "mlp" else 0.0
    return np.where(scores >= threshold, 1, -1).astype(np.int64), scores


# ── Persistence ─────────────────────────────────────────────────

def _model_payload(model: TrainedModel) -> dict:
    kind = model_kind(model)
    if kind == "knn":
        return {"k": model.k, "features": model.features.tolist(),
                "labels": model.labels.tolist(), "ids": list(model.ids)}
    if kind == "svm":
        return {"kernel": model.kernel.to_dict(), "c": model.c, "bias": model.bias,
                "iterations": model.iterations,
                "support_vectors": model.support_vectors.tolist(),
                "alphas": model.alphas.tolist(), "signed_coeffs": model.signed_coeffs.tolist()}
    return {"w_hidden": model.w_hidden.tolist(), "w_out": model.w_out.tolist(),
            "input_low": model.input_low.tolist(), "input_high": model.input_high.tolist(),
            "history": list(model.history)}


def save_model(model: TrainedModel, path, config: Optional[RunConfig] = None) -> Path:
    """Python floats serialize with repr precision, so predictions survive the round trip."""
    data = {"format": MODEL_FORMAT, "kind": model_kind(model), "model": _model_payload(model)}
    if config is not None:
        data["config"] = config.to_dict()
        data["fingerprint"] = config.fingerprint()
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(json.dumps(data, ensure_ascii=False, indent=2), encoding="utf-8")
    logger.info("model (%s) written to %s", data["kind"], p)
    return p


def _array(payload: dict, key: str, ndim: int) -> np.ndarray:
    a = np.asarray(payload[key], dtype=np.float64)
    if ndim == 2 and a.size == 0:
        a = a.reshape(0, 0)
    if a.ndim != ndim:
        raise ModelFormatError(f"field '{key}' must be {ndim}-dimensional")
    return a


def load_model(path) -> TrainedModel:
    p = Path(path)
    try:
        data = json.loads(p.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise ModelFormatError(f"cannot read model {p}: {e}") from e
    if not isinstance(data, dict) or data.get("format") != MODEL_FORMAT:
        raise ModelFormatError(f"{p} is not a lungtex model file (format {MODEL_FORMAT})")
    kind, m = data.get("kind"), data.get("model")
    try:
        if kind == "knn":
            return KnnModel(_array(m, "features", 2), np.asarray(m["labels"], dtype=np.int64),
                            tuple(m["ids"]), int(m["k"]))
        if kind == "svm":
            kernel = KernelSpec(m["kernel"]["kind"], m["kernel"]["gamma"])
            return SvmModel(_array(m, "support_vectors", 2), _array(m, "alphas", 1),
                            _array(m, "signed_coeffs", 1), float(m["bias"]), kernel,
                            float(m["c"]), int(m.get("iterations", 0)))
        if kind == "mlp":
            return MlpModel(_array(m, "w_hidden", 2), _array(m, "w_out", 2),
                            _array(m, "input_low", 1), _array(m, "input_high", 1),
                            tuple(m.get("history", ())))
    except (KeyError, TypeError, ValueError) as e:
        raise ModelFormatError(f"{p}: malformed {kind} model: {e}") from e
    raise ModelFormatError(f"{p}: unknown model kind '{kind}'")

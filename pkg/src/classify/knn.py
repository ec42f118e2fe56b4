"""
Lungtex kNN — Exact k-nearest-neighbour voting with Euclidean distance
"""

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from src.core.errors import ClassifierError


@dataclass(frozen=True, eq=False)
class KnnModel:
    features: np.ndarray    # stored vectors, M x d
    labels: np.ndarray      # +1 / -1
    ids: tuple
    k: int = 3

    def __post_init__(self):
        if self.labels.size == 0:
            raise ClassifierError("kNN store is empty")
        if self.k < 1 or self.k % 2 == 0:
            raise ClassifierError(f"k must be a positive odd number, got {self.k}")
        if self.k > self.labels.size:
            raise ClassifierError(f"k={self.k} exceeds the {self.labels.size} stored vectors")


def knn_fit(X: np.ndarray, y: np.ndarray, ids=None, k: int = 3) -> KnnModel:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    ids = tuple(ids) if ids is not None else tuple(str(i) for i in range(y.size))
    return KnnModel(X.copy(), y.copy(), ids, k)


def knn_neighbors(model: KnnModel, X: np.ndarray) -> np.ndarray:
    """Row indices of the k nearest stored vectors per query; distance ties go to the
    lower row index (stable sort)."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != model.features.shape[1]:
        raise ClassifierError(f"dimension mismatch: store has {model.features.shape[1]}, query {X.shape[1]}")
    d = cdist(X, model.features, "euclidean")
    return np.argsort(d, axis=1, kind="stable")[:, :model.k]


def knn_scores(model: KnnModel, X: np.ndarray) -> np.ndarray:
    """Signed vote sum per query; positive means abnormal."""
    return model.labels[knn_neighbors(model, X)].sum(axis=1).astype(np.float64)


def knn_predict(model: KnnModel, x) -> tuple:
    """(majority label, ids of the k neighbours nearest first)."""
    idx = knn_neighbors(model, x)[0]
    votes = int(model.labels[idx].sum())
    return (1 if votes >= 0 else -1), [model.ids[i] for i in idx]

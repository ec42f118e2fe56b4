"""
Lungtex Kernels — SVM kernel functions and Gram matrices
linear · Bhattacharyya · histogram intersection · RBF
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.spatial.distance import cdist

from src.core.errors import KernelError, NegativeInputError

KERNEL_KINDS = ("linear", "bhattacharyya", "intersection", "rbf")
# command-line tokens -> kernel kinds
KERNEL_ALIASES = {
    "linear": "linear",
    "bhat": "bhattacharyya", "bhattacharyya": "bhattacharyya",
    "isect": "intersection", "intersection": "intersection",
    "rbf": "rbf",
}
_NON_NEGATIVE = {"bhattacharyya", "intersection"}
_CHUNK_BYTES = 64 * 1024 * 1024


@dataclass(frozen=True)
class KernelSpec:
    kind: str = "linear"
    gamma: Optional[float] = None   # rbf only; None resolves to 1/d

    def __post_init__(self):
        kind = KERNEL_ALIASES.get(self.kind)
        if kind is None:
            raise KernelError(f"unknown kernel '{self.kind}'")
        object.__setattr__(self, "kind", kind)
        if self.gamma is not None and self.gamma <= 0:
            raise KernelError(f"rbf gamma must be positive, got {self.gamma}")

    def resolved(self, dim: int) -> "KernelSpec":
        if self.kind == "rbf" and self.gamma is None:
            return KernelSpec("rbf", 1.0 / dim)
        return self

    def to_dict(self) -> dict:
        return {"kind": self.kind, "gamma": self.gamma}


def _check_non_negative(spec: KernelSpec, *arrays):
    if spec.kind in _NON_NEGATIVE:
        for a in arrays:
            if np.any(a < 0):
                raise NegativeInputError(f"{spec.kind} kernel received a negative entry")


def kernel_eval(spec: KernelSpec, a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise KernelError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(gram(spec, a[None, :], b[None, :])[0, 0])


def gram(spec: KernelSpec, A, B=None) -> np.ndarray:
    """K[i, j] = K(A_i, B_j); B defaults to A."""
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    B = A if B is None else np.atleast_2d(np.asarray(B, dtype=np.float64))
    if A.shape[1] != B.shape[1]:
        raise KernelError(f"dimension mismatch: {A.shape[1]} vs {B.shape[1]}")
    _check_non_negative(spec, A, B)
    spec = spec.resolved(A.shape[1])

    if spec.kind == "linear":
        return A @ B.T
    if spec.kind == "bhattacharyya":
        # sum_j sqrt(a_j b_j) = <sqrt(a), sqrt(b)>
        return np.sqrt(A) @ np.sqrt(B).T
    if spec.kind == "intersection":
        out = np.empty((A.shape[0], B.shape[0]))
        rows = max(1, _CHUNK_BYTES // (8 * max(1, B.size)))
        for s in range(0, A.shape[0], rows):
            out[s:s + rows] = np.minimum(A[s:s + rows, None, :], B[None, :, :]).sum(axis=2)
        return out
    return np.exp(-spec.gamma * cdist(A, B, "sqeuclidean"))

"""
Lungtex SVM — Binary soft-margin SVM trained by an SMO dual solver
Maximal-violating-pair selection · analytic pair update · bias from free vectors
"""

import logging
from dataclasses import dataclass

import numpy as np

from src.classify.kernels import KernelSpec, gram
from src.core.errors import ClassifierError, ConvergenceError, NonPsdKernelError

logger = logging.getLogger(__name__)

SMO_TOL = 1e-4
SMO_MAX_ITER = 100_000
SV_THRESHOLD = 1e-8
TAU = 1e-12


@dataclass(frozen=True, eq=False)
class SvmModel:
    support_vectors: np.ndarray     # n_sv x d
    alphas: np.ndarray              # alpha_i in (0, C]
    signed_coeffs: np.ndarray       # alpha_i * y_i
    bias: float
    kernel: KernelSpec
    c: float
    iterations: int = 0

    @property
    def n_support(self) -> int:
        return self.alphas.size


@dataclass(frozen=True, eq=False)
class DualSolution:
    alphas: np.ndarray
    bias: float
    objective: float
    iterations: int


def dual_objective(alphas: np.ndarray, y: np.ndarray, K: np.ndarray) -> float:
    """Maximised dual: sum(a) - 1/2 sum_ij a_i a_j y_i y_j K_ij."""
    ay = alphas * y
    return float(alphas.sum() - 0.5 * ay @ K @ ay)


def solve_dual(K: np.ndarray, y: np.ndarray, c: float, tol: float = SMO_TOL,
               max_iter: int = SMO_MAX_ITER, kernel_name: str = "kernel") -> DualSolution:
    """min 1/2 a'Qa - e'a  s.t.  y'a = 0, 0 <= a <= C, with Q_ij = y_i y_j K_ij.
    Works on G = Qa - e; stops when the maximal KKT violation m(a) - M(a) < tol."""
    n = y.size
    y = y.astype(np.float64)
    Q = (y[:, None] * y[None, :]) * K
    diag = np.diag(K).copy()
    alpha = np.zeros(n)
    G = -np.ones(n)

    it = 0
    while True:
        up = ((alpha < c) & (y > 0)) | ((alpha > 0) & (y < 0))
        low = ((alpha < c) & (y < 0)) | ((alpha > 0) & (y > 0))
        score = -y * G
        if not up.any() or not low.any():
            break
        i = int(np.flatnonzero(up)[np.argmax(score[up])])
        j = int(np.flatnonzero(low)[np.argmin(score[low])])
        if score[i] - score[j] < tol:
            break
        if it >= max_iter:
            raise ConvergenceError(
                f"SMO did not converge in {max_iter} iterations (gap {score[i] - score[j]:.3g})")
        it += 1

        curvature = diag[i] + diag[j] - 2.0 * K[i, j]
        if curvature < -1e-8 * max(1.0, diag[i] + diag[j]):
            raise NonPsdKernelError(
                f"{kernel_name} kernel matrix is not positive semi-definite "
                f"(curvature {curvature:.3g} on pair {i}, {j})")
        curvature = max(curvature, TAU)

        ai, aj = alpha[i], alpha[j]
        if y[i] != y[j]:
            delta = (-G[i] - G[j]) / curvature
            diff = ai - aj
            ai_new, aj_new = ai + delta, aj + delta
            if diff > 0:
                if aj_new < 0:
                    aj_new, ai_new = 0.0, diff
            elif ai_new < 0:
                ai_new, aj_new = 0.0, -diff
            if diff > 0:
                if ai_new > c:
                    ai_new, aj_new = c, c - diff
            elif aj_new > c:
                aj_new, ai_new = c, c + diff
        else:
            delta = (G[i] - G[j]) / curvature
            total = ai + aj
            ai_new, aj_new = ai - delta, aj + delta
            if total > c:
                if ai_new > c:
                    ai_new, aj_new = c, total - c
            elif aj_new < 0:
                aj_new, ai_new = 0.0, total
            if total > c:
                if aj_new > c:
                    aj_new, ai_new = c, total - c
            elif ai_new < 0:
                ai_new, aj_new = 0.0, total

        d_i, d_j = ai_new - ai, aj_new - aj
        alpha[i], alpha[j] = ai_new, aj_new
        G += Q[:, i] * d_i + Q[:, j] * d_j

    bias = -_rho(alpha, y, G, c)
    if it > max_iter // 10:
        logger.warning("SMO needed %d iterations", it)
    else:
        logger.debug("SMO converged in %d iterations", it)
    return DualSolution(alpha, bias, dual_objective(alpha, y, K), it)


def _rho(alpha: np.ndarray, y: np.ndarray, G: np.ndarray, c: float) -> float:
    """Average y_t G_t over free vectors; midpoint of the feasible interval otherwise."""
    yG = y * G
    at_upper = alpha >= c
    at_lower = alpha <= 0
    free = ~at_upper & ~at_lower
    if free.any():
        return float(yG[free].mean())
    ub_mask = (at_upper & (y < 0)) | (at_lower & (y > 0))
    lb_mask = (at_upper & (y > 0)) | (at_lower & (y < 0))
    ub = yG[ub_mask].min() if ub_mask.any() else np.inf
    lb = yG[lb_mask].max() if lb_mask.any() else -np.inf
    return float((ub + lb) / 2.0)


def svm_train(X: np.ndarray, y: np.ndarray, spec: KernelSpec, c: float = 1.0,
              tol: float = SMO_TOL, max_iter: int = SMO_MAX_ITER) -> SvmModel:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if c <= 0:
        raise ClassifierError(f"C must be positive, got {c}")
    if not (np.any(y > 0) and np.any(y < 0)):
        raise ClassifierError("SVM training needs both classes")
    spec = spec.resolved(X.shape[1])
    K = gram(spec, X)
    sol = solve_dual(K, y, c, tol, max_iter, kernel_name=spec.kind)
    keep = sol.alphas > SV_THRESHOLD
    alphas = sol.alphas[keep]
    logger.debug("SVM (%s, C=%g): %d support vectors of %d", spec.kind, c, int(keep.sum()), y.size)
    return SvmModel(X[keep].copy(), alphas, alphas * y[keep], sol.bias, spec, float(c), sol.iterations)


def svm_decision(model: SvmModel, X: np.ndarray) -> np.ndarray:
    """g(x) = sum_i alpha_i y_i K(x_i, x) + b for every row of X."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != model.support_vectors.shape[1]:
        raise ClassifierError(
            f"dimension mismatch: model expects {model.support_vectors.shape[1]}, got {X.shape[1]}")
    return gram(model.kernel, X, model.support_vectors) @ model.signed_coeffs + model.bias


def svm_predict(model: SvmModel, x) -> tuple:
    """(label, decision value); a decision value of exactly 0 is called abnormal (+1)."""
    g = float(svm_decision(model, x)[0])
    return (1 if g >= 0 else -1), g

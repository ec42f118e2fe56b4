"""
Lungtex MLP — One-hidden-layer perceptron trained with resilient backpropagation
tan-sigmoid hidden layer · log-sigmoid output · batch RProp with step rejection
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from src.core.errors import ClassifierError

logger = logging.getLogger(__name__)

HIDDEN_UNITS = 40
INIT_RANGE = 0.5
TARGET_LOW, TARGET_HIGH = 0.1, 0.9

ETA_PLUS, ETA_MINUS = 1.2, 0.5
DELTA_INIT, DELTA_MIN, DELTA_MAX = 0.01, 1e-6, 50.0
MIN_ERROR_CHANGE = 1e-8


@dataclass(frozen=True, eq=False)
class MlpModel:
    w_hidden: np.ndarray        # (d+1) x m, row 0 is the bias (x_0 = 1)
    w_out: np.ndarray           # (m+1) x s, row 0 is the bias (h_0 = 1)
    input_low: np.ndarray       # training minima per input
    input_high: np.ndarray      # training maxima per input
    history: tuple = field(default=())  # E(w) after each epoch

    @property
    def n_inputs(self) -> int:
        return self.w_hidden.shape[0] - 1

    @property
    def n_hidden(self) -> int:
        return self.w_hidden.shape[1]


def logistic(z):
    return 1.0 / (1.0 + np.exp(-z))


def scale_inputs(X: np.ndarray, low: np.ndarray, high: np.ndarray) -> np.ndarray:
    """Map each input to [-1, 1] over its training range; constant inputs map to 0."""
    span = high - low
    safe = np.where(span > 0, span, 1.0)
    Z = 2.0 * (X - low) / safe - 1.0
    return np.where(span > 0, Z, 0.0)


def _with_bias(A: np.ndarray) -> np.ndarray:
    return np.hstack([np.ones((A.shape[0], 1)), A])


def forward(w_hidden: np.ndarray, w_out: np.ndarray, Z: np.ndarray) -> tuple:
    """h = tanh([1, z] W_h), o = logistic([1, h] W_o)."""
    H = np.tanh(_with_bias(Z) @ w_hidden)
    O = logistic(_with_bias(H) @ w_out)
    return H, O


def loss_and_grad(w_hidden: np.ndarray, w_out: np.ndarray, Z: np.ndarray, T: np.ndarray) -> tuple:
    """E(w) = 1/2 sum (d - o)^2 over the batch and its gradient w.r.t. both layers."""
    Zb = _with_bias(Z)
    H = np.tanh(Zb @ w_hidden)
    Hb = _with_bias(H)
    O = logistic(Hb @ w_out)
    err = O - T
    E = 0.5 * float(np.sum(err ** 2))
    delta_o = err * O * (1.0 - O)
    g_out = Hb.T @ delta_o
    delta_h = (delta_o @ w_out[1:].T) * (1.0 - H ** 2)
    g_hidden = Zb.T @ delta_h
    return E, g_hidden, g_out


def mlp_init(n_inputs: int, n_hidden: int = HIDDEN_UNITS, n_out: int = 1, seed: int = 0) -> tuple:
    rng = np.random.default_rng(seed)
    w_hidden = rng.uniform(-INIT_RANGE, INIT_RANGE, size=(n_inputs + 1, n_hidden))
    w_out = rng.uniform(-INIT_RANGE, INIT_RANGE, size=(n_hidden + 1, n_out))
    return w_hidden, w_out


def targets_for(y: np.ndarray) -> np.ndarray:
    return np.where(np.asarray(y) > 0, TARGET_HIGH, TARGET_LOW).reshape(-1, 1)


def mlp_train(X: np.ndarray, y: np.ndarray, epochs: int = 500, seed: int = 0,
              n_hidden: int = HIDDEN_UNITS) -> MlpModel:
    """Batch RProp. Step sizes grow by eta+ while a weight's gradient keeps its sign and
    shrink by eta- when it flips (that weight then skips one update). A step that raises
    E(w) is rejected and every step size shrinks by eta-, so E never increases."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if X.ndim != 2 or X.shape[0] != y.size:
        raise ClassifierError(f"inconsistent training data: {X.shape} vs {y.size} labels")
    low, high = X.min(axis=0), X.max(axis=0)
    Z = scale_inputs(X, low, high)
    T = targets_for(y)

    weights = list(mlp_init(X.shape[1], n_hidden, 1, seed))
    steps = [np.full_like(w, DELTA_INIT) for w in weights]
    prev_grads = [np.zeros_like(w) for w in weights]
    E, *grads = loss_and_grad(weights[0], weights[1], Z, T)
    history = [E]

    for epoch in range(epochs):
        effective = []
        for g, pg, delta in zip(grads, prev_grads, steps):
            agree = g * pg
            delta[agree > 0] = np.minimum(delta[agree > 0] * ETA_PLUS, DELTA_MAX)
            delta[agree < 0] = np.maximum(delta[agree < 0] * ETA_MINUS, DELTA_MIN)
            g = g.copy()
            g[agree < 0] = 0.0
            effective.append(g)
        trial = [w - np.sign(g) * delta for w, g, delta in zip(weights, effective, steps)]
        E_new, *grads_new = loss_and_grad(trial[0], trial[1], Z, T)

        if E_new <= E:
            change = E - E_new
            weights, grads, prev_grads, E = trial, grads_new, effective, E_new
            history.append(E)
            if change < MIN_ERROR_CHANGE and any(np.any(g != 0) for g in effective):
                logger.debug("RProp stopped at epoch %d: error change %.3g", epoch + 1, change)
                break
        else:
            for delta in steps:
                np.maximum(delta * ETA_MINUS, DELTA_MIN, out=delta)
            prev_grads = [np.zeros_like(w) for w in weights]
            history.append(E)
            if all(np.all(delta <= DELTA_MIN) for delta in steps):
                logger.debug("RProp stopped at epoch %d: step sizes exhausted", epoch + 1)
                break

    return MlpModel(weights[0], weights[1], low, high, tuple(history))


def mlp_scores(model: MlpModel, X: np.ndarray) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != model.n_inputs:
        raise ClassifierError(f"dimension mismatch: model expects {model.n_inputs}, got {X.shape[1]}")
    _, O = forward(model.w_hidden, model.w_out, scale_inputs(X, model.input_low, model.input_high))
    return O[:, 0]


def mlp_predict(model: MlpModel, x) -> tuple:
    """(label, score): +1 iff o >= 0.5."""
    o = float(mlp_scores(model, x)[0])
    return (1 if o >= 0.5 else -1), o

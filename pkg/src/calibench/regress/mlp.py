"""Fully connected regressor trained with Adam on the squared L2 loss.

Written against plain numpy so training is reproducible bit-for-bit from a
seed.  Inputs are standardized with statistics of the training data (angle
columns are in degrees and would otherwise dwarf the millimetre columns);
the output bias starts at the target mean so the optimiser only has to
learn structure, not the operating point.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from ..worldsim import Orientation

ACTIVATIONS = ("relu", "sigmoid", "tanh")

DEFAULT_BATCH = 64
DEFAULT_LR = 1e-3
DEFAULT_BETAS = (0.9, 0.999)
DEFAULT_EPS = 1e-8


class MlpArch(NamedTuple):
    hidden_layers: int
    width: int
    activation: str

    @property
    def label(self) -> str:
        return f"u{self.width}_h{self.hidden_layers}_{self.activation}"


def _activate(z: np.ndarray, kind: str) -> np.ndarray:
    if kind == "relu":
        return np.maximum(z, 0.0)
    if kind == "sigmoid":
        return 1.0 / (1.0 + np.exp(-z))
    if kind == "tanh":
        return np.tanh(z)
    raise ValueError(f"unknown activation {kind!r}")


def _activate_grad(z: np.ndarray, a: np.ndarray, kind: str) -> np.ndarray:
    # a is the already-computed activation of z
    if kind == "relu":
        return (z > 0).astype(z.dtype)
    if kind == "sigmoid":
        return a * (1.0 - a)
    if kind == "tanh":
        return 1.0 - a * a
    raise ValueError(f"unknown activation {kind!r}")


def squared_l2(pred: np.ndarray, target: np.ndarray) -> float:
    """Mean over rows of the squared Euclidean residual."""
    r = np.asarray(pred, float) - np.asarray(target, float)
    return float(np.mean(np.sum(r * r, axis=1)))


@dataclass
class MlpModel:
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    activation: str
    input_mean: np.ndarray
    input_std: np.ndarray
    arch: MlpArch
    epoch_losses: list[float] = field(default_factory=list)

    def __post_init__(self):
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"activation must be one of {ACTIVATIONS}")
        if len(self.weights) != len(self.biases):
            raise ValueError("weights and biases must pair up")
        for W, b, W_next in zip(self.weights, self.biases, self.weights[1:] + [None]):
            if b.shape != (W.shape[1],):
                raise ValueError("bias shape must match layer width")
            if W_next is not None and W_next.shape[0] != W.shape[1]:
                raise ValueError("layer shapes do not chain")
        if not np.all(self.input_std > 0):
            raise ValueError("standardization stds must be positive")

    @property
    def n_inputs(self) -> int:
        return self.weights[0].shape[0]

    def _forward(self, X: np.ndarray) -> tuple[list[np.ndarray], list[np.ndarray]]:
        """All pre-activations and activations; acts[0] is the standardized input."""
        zs: list[np.ndarray] = []
        acts = [(X - self.input_mean) / self.input_std]
        n_layers = len(self.weights)
        for i, (W, b) in enumerate(zip(self.weights, self.biases)):
            z = acts[-1] @ W + b
            zs.append(z)
            acts.append(z if i == n_layers - 1 else _activate(z, self.activation))
        return zs, acts

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, float))
        return self._forward(X)[1][-1]

    def predict_base(self, x_c, phi: Orientation) -> np.ndarray:
        """Predicted base position for one camera position and orientation."""
        pos = x_c.as_array() if hasattr(x_c, "as_array") else np.asarray(x_c, float)
        row = np.concatenate([pos, phi.as_array()])
        return self.predict(row)[0]


def mlp_gradient(model: MlpModel, X, Y) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Gradients of the mean squared L2 loss w.r.t. every weight and bias."""
    X = np.atleast_2d(np.asarray(X, float))
    Y = np.atleast_2d(np.asarray(Y, float))
    if len(X) == 0:
        raise ValueError("batch must be non-empty")
    zs, acts = model._forward(X)
    n = len(X)
    delta = 2.0 * (acts[-1] - Y) / n
    grads_W: list[np.ndarray] = [None] * len(model.weights)
    grads_b: list[np.ndarray] = [None] * len(model.biases)
    for i in range(len(model.weights) - 1, -1, -1):
        grads_W[i] = acts[i].T @ delta
        grads_b[i] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ model.weights[i].T) * _activate_grad(zs[i - 1], acts[i], model.activation)
    return grads_W, grads_b


def _init_model(n_in: int, n_out: int, arch: MlpArch, X: np.ndarray, Y: np.ndarray,
                rng: np.random.Generator) -> MlpModel:
    sizes = [n_in] + [arch.width] * arch.hidden_layers + [n_out]
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, (fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    biases[-1] = Y.mean(axis=0)
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std = np.where(std < 1e-12, 1.0, std)
    return MlpModel(weights, biases, arch.activation, mean, std, arch)


def train_mlp(data, arch: MlpArch | tuple = MlpArch(3, 300, "relu"),
              epochs: int = 1000, seed=0, *,
              batch_size: int = DEFAULT_BATCH, learning_rate: float = DEFAULT_LR,
              betas: tuple[float, float] = DEFAULT_BETAS, eps: float = DEFAULT_EPS
              ) -> MlpModel:
    """Mini-batch Adam on the mean squared L2 loss.

    Rows are shuffled each epoch with the seeded generator; with
    batch_size >= n the pass is full-batch and no shuffle happens.  A
    non-finite loss aborts immediately with the epoch and step in the
    message rather than returning a poisoned model.
    """
    X, Y = _as_xy(data)
    if len(X) == 0:
        raise ValueError("training set is empty")
    if epochs < 1:
        raise ValueError("epochs must be >= 1")
    arch = MlpArch(*arch)
    if arch.activation not in ACTIVATIONS:
        raise ValueError(f"activation must be one of {ACTIVATIONS}")
    rng = np.random.default_rng(seed)
    model = _init_model(X.shape[1], Y.shape[1], arch, X, Y, rng)

    params = model.weights + model.biases
    m = [np.zeros_like(p) for p in params]
    v = [np.zeros_like(p) for p in params]
    b1, b2 = betas
    t = 0
    n = len(X)
    full_batch = batch_size >= n
    for epoch in range(epochs):
        order = np.arange(n) if full_batch else rng.permutation(n)
        loss_sum = 0.0
        for lo in range(0, n, batch_size):
            idx = order[lo:lo + batch_size]
            Xb, Yb = X[idx], Y[idx]
            grads_W, grads_b = mlp_gradient(model, Xb, Yb)
            batch_loss = squared_l2(model.predict(Xb), Yb)
            if not np.isfinite(batch_loss):
                raise FloatingPointError(
                    f"training diverged: loss={batch_loss} at epoch {epoch}, "
                    f"step {lo // batch_size} (lr={learning_rate}, arch={arch.label})")
            loss_sum += batch_loss * len(idx)
            t += 1
            corr1 = 1.0 - b1 ** t
            corr2 = 1.0 - b2 ** t
            for p, g, mi, vi in zip(params, grads_W + grads_b, m, v):
                mi *= b1
                mi += (1.0 - b1) * g
                vi *= b2
                vi += (1.0 - b2) * g * g
                p -= learning_rate * (mi / corr1) / (np.sqrt(vi / corr2) + eps)
        model.epoch_losses.append(loss_sum / n)
    return model


def _as_xy(data) -> tuple[np.ndarray, np.ndarray]:
    if hasattr(data, "inputs") and hasattr(data, "targets"):
        return np.asarray(data.inputs, float), np.asarray(data.targets, float)
    X, Y = data
    return np.atleast_2d(np.asarray(X, float)), np.atleast_2d(np.asarray(Y, float))

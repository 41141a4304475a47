"""Dense ReLU network with softmax output, trained by momentum SGD."""

from __future__ import annotations

import numpy as np

from .adaboost import softmax


def init_params(sizes: list[int], rng: np.random.Generator) -> list[np.ndarray]:
    """Glorot-uniform weights and zero biases, as ``[W1, b1, W2, b2, ...]``."""
    params = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        params.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        params.append(np.zeros(fan_out))
    return params


def forward(params: list[np.ndarray], X: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
    """Logits and the list of layer inputs (for backprop)."""
    acts = [X]
    h = X
    n_layers = len(params) // 2
    for layer in range(n_layers):
        z = h @ params[2 * layer] + params[2 * layer + 1]
        if layer < n_layers - 1:
            h = np.maximum(z, 0.0)
            acts.append(h)
        else:
            h = z
    return h, acts


def loss_and_grad(params: list[np.ndarray], X: np.ndarray,
                  y: np.ndarray) -> tuple[float, list[np.ndarray]]:
    """Mean cross-entropy and its gradient with respect to every parameter."""
    n = X.shape[0]
    logits, acts = forward(params, X)
    z = logits - logits.max(axis=1, keepdims=True)
    logsum = np.log(np.exp(z).sum(axis=1))
    loss = float(np.mean(logsum - z[np.arange(n), y]))
    delta = np.exp(z - logsum[:, None])
    delta[np.arange(n), y] -= 1.0
    delta /= n
    grads: list[np.ndarray] = [None] * len(params)  # type: ignore[list-item]
    for layer in range(len(params) // 2 - 1, -1, -1):
        a = acts[layer]
        grads[2 * layer] = a.T @ delta
        grads[2 * layer + 1] = delta.sum(axis=0)
        if layer > 0:
            delta = (delta @ params[2 * layer].T) * (a > 0)
    return loss, grads


class MLP:
    def __init__(self, params: list[np.ndarray], mean: np.ndarray, scale: np.ndarray,
                 loss_history: list[float] | None = None):
        self.params = params
        self.mean = mean
        self.scale = scale
        self.loss_history = loss_history or []

    @classmethod
    def fit(cls, X: np.ndarray, y: np.ndarray, hp: dict, seed: int, n_classes: int) -> "MLP":
        n, d = X.shape
        if hp["standardize"]:
            mean = X.mean(axis=0)
            scale = X.std(axis=0)
            scale[scale == 0] = 1.0
        else:
            mean, scale = np.zeros(d), np.ones(d)
        Z = (X - mean) / scale
        rng = np.random.default_rng(seed)
        params = init_params([d, *hp["hidden"], n_classes], rng)
        velocity = [np.zeros_like(p) for p in params]
        lr, mu, batch = hp["learning_rate"], hp["momentum"], hp["batch"]
        history = []
        for _ in range(hp["epochs"]):
            perm = rng.permutation(n)
            epoch_loss = 0.0
            for start in range(0, n, batch):
                idx = perm[start:start + batch]
                loss, grads = loss_and_grad(params, Z[idx], y[idx])
                epoch_loss += loss * len(idx)
                for p, v, g in zip(params, velocity, grads):
                    v *= mu
                    v -= lr * g
                    p += v
            history.append(epoch_loss / n)
        return cls(params, mean, scale, history)

    def decision(self, X: np.ndarray) -> np.ndarray:
        return forward(self.params, (X - self.mean) / self.scale)[0]

    def proba(self, X: np.ndarray) -> np.ndarray:
        return softmax(self.decision(X))

    def to_dict(self) -> dict:
        return {"params": [p.tolist() for p in self.params], "mean": self.mean.tolist(),
                "scale": self.scale.tolist()}

    @classmethod
    def from_dict(cls, d: dict, n_classes: int) -> "MLP":
        return cls([np.asarray(p, dtype=np.float64) for p in d["params"]],
                   np.asarray(d["mean"], dtype=np.float64), np.asarray(d["scale"], dtype=np.float64))

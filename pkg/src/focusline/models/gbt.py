"""Multi-class gradient-boosted trees with softmax loss and Newton leaf weights."""

from __future__ import annotations

import numpy as np

from ._tree import Presorted, Tree, grow_newton
from .adaboost import softmax

_MIN_HESS = 1e-16


def cross_entropy(F: np.ndarray, y: np.ndarray) -> float:
    z = F - F.max(axis=1, keepdims=True)
    logz = np.log(np.exp(z).sum(axis=1))
    return float(np.mean(logz - z[np.arange(len(y)), y]))


class GradientBoostedTrees:
    """``rounds`` x ``n_classes`` regression trees; scores start at zero."""

    def __init__(self, trees: list[list[Tree]], learning_rate: float, n_classes: int,
                 loss_history: list[float] | None = None):
        self.trees = trees
        self.learning_rate = learning_rate
        self.n_classes = n_classes
        self.loss_history = loss_history or []

    @classmethod
    def fit(cls, X: np.ndarray, y: np.ndarray, hp: dict, seed: int,
            n_classes: int) -> "GradientBoostedTrees":
        n, _ = X.shape
        data = Presorted(X)
        onehot = np.zeros((n, n_classes))
        onehot[np.arange(n), y] = 1.0
        F = np.zeros((n, n_classes))
        lr = hp["learning_rate"]
        rounds = []
        history = [cross_entropy(F, y)]
        for _ in range(hp["rounds"]):
            p = softmax(F)
            grad = p - onehot
            hess = np.maximum(p * (1.0 - p), _MIN_HESS)
            round_trees = []
            for k in range(n_classes):
                tree = grow_newton(data, grad[:, k], hess[:, k], lam=hp["lambda"], max_depth=hp["depth"])
                F[:, k] += lr * tree.value[tree.apply(X), 0]
                round_trees.append(tree)
            rounds.append(round_trees)
            history.append(cross_entropy(F, y))
        return cls(rounds, lr, n_classes, history)

    def decision(self, X: np.ndarray) -> np.ndarray:
        F = np.zeros((X.shape[0], self.n_classes))
        for round_trees in self.trees:
            for k, tree in enumerate(round_trees):
                F[:, k] += self.learning_rate * tree.predict_value(X)[:, 0]
        return F

    def proba(self, X: np.ndarray) -> np.ndarray:
        return softmax(self.decision(X))

    def importance(self, d: int) -> np.ndarray:
        total = np.zeros(d)
        for round_trees in self.trees:
            for tree in round_trees:
                total += tree.importance
        s = total.sum()
        return total / s if s > 0 else np.full(d, 1.0 / d)

    def to_dict(self) -> dict:
        return {"learning_rate": self.learning_rate,
                "trees": [[t.to_dict() for t in r] for r in self.trees],
                "loss_history": self.loss_history}

    @classmethod
    def from_dict(cls, d: dict, n_classes: int) -> "GradientBoostedTrees":
        return cls([[Tree.from_dict(t) for t in r] for r in d["trees"]], d["learning_rate"],
                   n_classes, d.get("loss_history"))

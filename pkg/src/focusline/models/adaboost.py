"""SAMME multi-class AdaBoost over shallow Gini trees."""

from __future__ import annotations

import numpy as np

from ._tree import Presorted, Tree, grow_classifier
from .forest import normalized_importance

# a perfect weak learner would get an infinite weight; clip its error instead
_MIN_ERROR = 1e-10


def softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


class AdaBoost:
    def __init__(self, trees: list[Tree], alphas: list[float], n_classes: int):
        self.trees = trees
        self.alphas = np.asarray(alphas, dtype=np.float64)
        self.n_classes = n_classes

    @classmethod
    def fit(cls, X: np.ndarray, y: np.ndarray, hp: dict, seed: int, n_classes: int) -> "AdaBoost":
        n, d = X.shape
        data = Presorted(X)
        K = n_classes
        w = np.full(n, 1.0 / n)
        trees, alphas = [], []
        for m in range(hp["n_estimators"]):
            tree = grow_classifier(data, y, K, sample_weight=w, max_depth=hp["max_depth"], seed=seed + m)
            miss = tree.predict_value(X).argmax(axis=1) != y
            err = float(w[miss].sum() / w.sum())
            if err >= 1.0 - 1.0 / K:
                if not trees:
                    # keep one learner so the ensemble can still predict
                    trees.append(tree)
                    alphas.append(1.0)
                break
            e = max(err, _MIN_ERROR)
            alpha = hp["learning_rate"] * (np.log((1.0 - e) / e) + np.log(K - 1.0))
            trees.append(tree)
            alphas.append(float(alpha))
            if err <= 0.0:
                break
            w = w * np.exp(alpha * miss)
            w /= w.sum()
        return cls(trees, alphas, n_classes)

    def decision(self, X: np.ndarray) -> np.ndarray:
        D = np.zeros((X.shape[0], self.n_classes))
        rows = np.arange(X.shape[0])
        for tree, a in zip(self.trees, self.alphas):
            D[rows, tree.predict_value(X).argmax(axis=1)] += a
        return D / self.alphas.sum()

    def proba(self, X: np.ndarray) -> np.ndarray:
        return softmax(self.decision(X))

    def importance(self, d: int) -> np.ndarray:
        return normalized_importance(self.trees, self.alphas, d)

    def to_dict(self) -> dict:
        return {"trees": [t.to_dict() for t in self.trees], "alphas": self.alphas.tolist()}

    @classmethod
    def from_dict(cls, d: dict, n_classes: int) -> "AdaBoost":
        return cls([Tree.from_dict(t) for t in d["trees"]], d["alphas"], n_classes)

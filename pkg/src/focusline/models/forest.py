"""Bagged Gini trees with random feature subsets at each split."""

from __future__ import annotations

import numpy as np

from ._tree import Presorted, Tree, grow_classifier


def resolve_max_features(setting, d: int) -> int:
    if setting == "sqrt":
        return max(1, min(d, int(round(np.sqrt(d)))))
    if setting == "all":
        return d
    return min(int(setting), d)


def tree_votes(trees: list[Tree], X: np.ndarray, n_classes: int) -> np.ndarray:
    votes = np.zeros((X.shape[0], n_classes))
    rows = np.arange(X.shape[0])
    for tree in trees:
        votes[rows, tree.predict_value(X).argmax(axis=1)] += 1.0
    return votes


def normalized_importance(trees: list[Tree], weights, d: int) -> np.ndarray:
    total = np.zeros(d)
    for tree, w in zip(trees, weights):
        s = tree.importance.sum()
        if s > 0:
            total += w * tree.importance / s
    s = total.sum()
    return total / s if s > 0 else np.full(d, 1.0 / d)


class RandomForest:
    def __init__(self, trees: list[Tree], n_classes: int):
        self.trees = trees
        self.n_classes = n_classes

    @classmethod
    def fit(cls, X: np.ndarray, y: np.ndarray, hp: dict, seed: int, n_classes: int) -> "RandomForest":
        n, d = X.shape
        data = Presorted(X)
        mtry = resolve_max_features(hp["max_features"], d)
        rng = np.random.default_rng(seed)
        trees = []
        for _ in range(hp["n_trees"]):
            counts = (np.bincount(rng.integers(0, n, n), minlength=n) if hp["bootstrap"]
                      else np.ones(n, dtype=np.int64))
            tree_seed = int(rng.integers(0, 2 ** 63))
            trees.append(grow_classifier(data, y, n_classes, counts=counts,
                                         max_depth=hp["max_depth"],
                                         min_samples_leaf=hp["min_samples_leaf"],
                                         max_features=mtry, seed=tree_seed))
        return cls(trees, n_classes)

    def proba(self, X: np.ndarray) -> np.ndarray:
        return tree_votes(self.trees, X, self.n_classes) / len(self.trees)

    def importance(self, d: int) -> np.ndarray:
        return normalized_importance(self.trees, np.ones(len(self.trees)), d)

    def to_dict(self) -> dict:
        return {"trees": [t.to_dict() for t in self.trees]}

    @classmethod
    def from_dict(cls, d: dict, n_classes: int) -> "RandomForest":
        return cls([Tree.from_dict(t) for t in d["trees"]], n_classes)

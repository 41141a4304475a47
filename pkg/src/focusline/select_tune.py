"""Importance-ranked top-k feature sweeps and validation grid search."""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .features import FeatureTable
from .models import ModelSpec, TrainedModel, fit
from .types import FocuslineError, ValidationError

log = logging.getLogger(__name__)

RANKING_TREES = 400
K_STEP = 5

DEFAULT_GRIDS: dict[str, dict[str, list]] = {
    "svm": {"C": [0.1, 1.0, 10.0, 100.0], "gamma": [0.01, 0.1, 1.0]},
    "mlp": {"learning_rate": [0.001, 0.01, 0.1], "epochs": [100, 200]},
    "random_forest": {"n_trees": [100, 200, 400], "max_depth": [None, 10, 20]},
    "adaboost": {"n_estimators": [50, 100, 200], "max_depth": [1, 2, 3]},
    "gbt": {"rounds": [100, 200], "depth": [3, 6], "learning_rate": [0.1, 0.3]},
}


class GridPointError(FocuslineError):
    pass


@dataclass(frozen=True)
class FeatureRanking:
    order: tuple[int, ...]
    importances: tuple[float, ...]
    source: ModelSpec

    def __post_init__(self):
        if sorted(self.order) != list(range(len(self.order))):
            raise ValidationError("ranking is not a permutation")

    def top(self, k: int) -> list[int]:
        """The ``k`` best features, in ascending column order."""
        if not 1 <= k <= len(self.order):
            raise ValidationError(f"k={k} outside 1..{len(self.order)}")
        return sorted(self.order[:k])

    def to_dict(self) -> dict:
        return {"order": list(self.order), "importances": list(self.importances),
                "source": self.source.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureRanking":
        return cls(tuple(d["order"]), tuple(d["importances"]), ModelSpec.from_dict(d["source"]))


@dataclass
class SweepResult:
    ks: list[int]
    accuracies: list[float]
    best_k: int
    best_accuracy: float

    def rows(self) -> list[tuple[int, float]]:
        return list(zip(self.ks, self.accuracies))


@dataclass
class TuneResult:
    kind: str
    k: int
    points: list[dict]
    accuracies: list[float]
    chosen_index: int
    model: TrainedModel | None = field(default=None, repr=False)

    @property
    def chosen(self) -> dict:
        return self.points[self.chosen_index]

    @property
    def chosen_accuracy(self) -> float:
        return self.accuracies[self.chosen_index]


def validation_accuracy(model: TrainedModel, table: FeatureTable) -> float:
    if len(table) == 0:
        raise ValidationError("validation table is empty")
    return float(np.mean(model.predict(model.project(table.X)) == table.labels))


def rank_features(train: FeatureTable, seed: int = 0, n_trees: int = RANKING_TREES) -> FeatureRanking:
    """Rank columns by the impurity importance of a reference random forest.

    Ties keep the lower column index first.
    """
    spec = ModelSpec("random_forest", {"n_trees": n_trees}, seed)
    model = fit(spec, train.X, train.labels)
    imp = model.importance()
    order = np.lexsort((np.arange(len(imp)), -imp))
    return FeatureRanking(tuple(int(i) for i in order), tuple(float(v) for v in imp), spec)


def default_ks(n_features: int) -> list[int]:
    return list(range(K_STEP, n_features + 1, K_STEP))


def _best(values: Sequence[float]) -> int:
    # first maximum: smallest k / earliest grid point wins ties
    return int(np.argmax(np.asarray(values)))


def sweep_top_k(spec: ModelSpec, ranking: FeatureRanking, train: FeatureTable, val: FeatureTable,
                ks: Sequence[int] | None = None) -> SweepResult:
    """Validation accuracy of ``spec`` trained on the top-k features for each k."""
    ks = list(ks) if ks is not None else default_ks(len(ranking.order))
    accs = []
    for k in ks:
        model = fit(spec, train.X, train.labels, ranking.top(k))
        accs.append(validation_accuracy(model, val))
        log.info("%s k=%d val_acc=%.4f", spec.kind, k, accs[-1])
    i = _best(accs)
    return SweepResult(ks, accs, ks[i], accs[i])


def grid_points(grid: dict[str, Sequence]) -> list[dict]:
    if not grid or any(len(v) == 0 for v in grid.values()):
        raise ValidationError("grid must have at least one value per parameter")
    keys = list(grid)
    return [dict(zip(keys, combo)) for combo in itertools.product(*(grid[k] for k in keys))]


def grid_search(kind: str, grid: dict[str, Sequence] | None, k_best: int, ranking: FeatureRanking,
                train: FeatureTable, val: FeatureTable, seed: int = 0,
                base: dict | None = None) -> TuneResult:
    """Exhaustive search over the Cartesian product of ``grid`` on the top ``k_best`` features."""
    points = grid_points(grid if grid is not None else DEFAULT_GRIDS[kind])
    subset = ranking.top(k_best)
    accs, best_model, best_acc = [], None, -1.0
    for point in points:
        try:
            spec = ModelSpec(kind, {**(base or {}), **point}, seed)
            model = fit(spec, train.X, train.labels, subset)
        except FocuslineError as exc:
            raise GridPointError(f"{kind} grid point {point}: {exc}") from exc
        acc = validation_accuracy(model, val)
        log.info("%s %s val_acc=%.4f", kind, point, acc)
        accs.append(acc)
        if acc > best_acc:
            best_acc, best_model = acc, model
    return TuneResult(kind, k_best, points, accs, _best(accs), best_model)

"""Five natively implemented classifiers behind one fit/predict interface."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from ..types import FocuslineError, N_CLASSES, ValidationError
from .adaboost import AdaBoost
from .forest import RandomForest
from .gbt import GradientBoostedTrees
from .mlp import MLP
from .spec import KINDS, SCHEMAS, ModelSpec
from .svm import OneVsRestSVM

MODEL_FORMAT = "focusline-model"
MODEL_FORMAT_VERSION = 1
MIN_TRAINING_ROWS = 10

_ESTIMATORS = {
    "random_forest": RandomForest,
    "adaboost": AdaBoost,
    "gbt": GradientBoostedTrees,
    "svm": OneVsRestSVM,
    "mlp": MLP,
}
_IMPORTANCE_KINDS = ("random_forest", "adaboost", "gbt")

__all__ = ["KINDS", "SCHEMAS", "ModelSpec", "TrainedModel", "fit", "predict", "predict_proba",
           "importance", "save_model", "load_model", "DegenerateTrainingError", "ShapeError"]


class DegenerateTrainingError(FocuslineError):
    pass


class ShapeError(FocuslineError, ValueError):
    pass


@dataclass
class TrainedModel:
    spec: ModelSpec
    estimator: object
    feature_subset: tuple[int, ...]
    classes: tuple[int, ...] = tuple(range(N_CLASSES))

    @property
    def kind(self) -> str:
        return self.spec.kind

    def project(self, X: np.ndarray) -> np.ndarray:
        """Select this model's feature columns from a full-width matrix."""
        return np.asarray(X, dtype=np.float64)[:, list(self.feature_subset)]

    def _check(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1 and X.size == 0:
            X = X.reshape(0, len(self.feature_subset))
        if X.ndim != 2 or X.shape[1] != len(self.feature_subset):
            raise ShapeError(f"expected {len(self.feature_subset)} features per row, got shape {X.shape}")
        return X

    def predict_proba(self, X) -> np.ndarray:
        X = self._check(X)
        if X.shape[0] == 0:
            return np.zeros((0, len(self.classes)))
        return self.estimator.proba(X)

    def predict(self, X) -> np.ndarray:
        # argmax picks the first maximum, so ties go to the lower class index
        return self.predict_proba(X).argmax(axis=1).astype(np.int64)

    def importance(self) -> np.ndarray | None:
        if self.kind not in _IMPORTANCE_KINDS:
            return None
        return self.estimator.importance(len(self.feature_subset))

    def to_dict(self) -> dict:
        return {"format": MODEL_FORMAT, "version": MODEL_FORMAT_VERSION,
                "spec": self.spec.to_dict(), "classes": list(self.classes),
                "feature_subset": list(self.feature_subset),
                "state": self.estimator.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "TrainedModel":
        if d.get("format") != MODEL_FORMAT:
            raise ValidationError("not a focusline model file")
        if d.get("version") != MODEL_FORMAT_VERSION:
            raise ValidationError(f"unsupported model format version {d.get('version')!r}")
        spec = ModelSpec.from_dict(d["spec"])
        classes = tuple(int(c) for c in d["classes"])
        est = _ESTIMATORS[spec.kind].from_dict(d["state"], len(classes))
        return cls(spec, est, tuple(int(i) for i in d["feature_subset"]), classes)


def fit(spec: ModelSpec, X, y, feature_subset: Sequence[int] | None = None) -> TrainedModel:
    """Train ``spec`` on the columns ``feature_subset`` of ``X`` (all columns by default)."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or len(y) != X.shape[0]:
        raise ShapeError(f"X has shape {X.shape} but y has length {len(y)}")
    subset = tuple(range(X.shape[1])) if feature_subset is None else tuple(int(i) for i in feature_subset)
    if not subset:
        raise ValidationError("feature subset is empty")
    Xs = np.ascontiguousarray(X[:, list(subset)])
    if not np.all(np.isfinite(Xs)):
        raise ValidationError("training features contain non-finite values")
    if Xs.shape[0] < MIN_TRAINING_ROWS:
        raise DegenerateTrainingError(f"need at least {MIN_TRAINING_ROWS} rows, got {Xs.shape[0]}")
    if np.any((y < 0) | (y >= N_CLASSES)):
        raise ValidationError(f"labels must lie in 0..{N_CLASSES - 1}")
    if len(np.unique(y)) < 2:
        raise DegenerateTrainingError("training labels contain a single class")
    est = _ESTIMATORS[spec.kind].fit(Xs, y, spec.hyperparameters, spec.seed, N_CLASSES)
    return TrainedModel(spec, est, subset)


def predict(model: TrainedModel, X) -> np.ndarray:
    return model.predict(X)


def predict_proba(model: TrainedModel, X) -> np.ndarray:
    return model.predict_proba(X)


def importance(model: TrainedModel) -> np.ndarray | None:
    """Normalized importances for tree models; ``None`` for svm and mlp."""
    return model.importance()


def dumps_model(model: TrainedModel) -> str:
    return json.dumps(model.to_dict(), sort_keys=True, separators=(",", ":"))


def save_model(model: TrainedModel, path: str | Path):
    Path(path).write_text(dumps_model(model))


def load_model(path: str | Path) -> TrainedModel:
    try:
        return TrainedModel.from_dict(json.loads(Path(path).read_text()))
    except (json.JSONDecodeError, KeyError) as exc:
        raise ValidationError(f"{path}: malformed model file ({exc})") from None

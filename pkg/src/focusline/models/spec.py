"""Declarative model configuration and hyperparameter schemas."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable

from ..types import ValidationError

KINDS = ("svm", "mlp", "random_forest", "adaboost", "gbt")


def _pos_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool) and v >= 1


def _pos_real(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v) and v > 0


def _nonneg_real(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v) and v >= 0


def _depth(v) -> bool:
    return v is None or _pos_int(v)


def _max_features(v) -> bool:
    return v in ("sqrt", "all") or _pos_int(v)


def _optional_pos_real(v) -> bool:
    return v is None or _pos_real(v)


def _bool(v) -> bool:
    return isinstance(v, bool)


def _momentum(v) -> bool:
    return _nonneg_real(v) and v < 1


def _hidden(v) -> bool:
    return isinstance(v, (list, tuple)) and len(v) >= 1 and all(_pos_int(h) for h in v)


# name -> (default, validator, description)
SCHEMAS: dict[str, dict[str, tuple[Any, Callable[[Any], bool], str]]] = {
    "random_forest": {
        "n_trees": (200, _pos_int, "positive integer"),
        "max_depth": (None, _depth, "positive integer or null (unlimited)"),
        "min_samples_leaf": (1, _pos_int, "positive integer"),
        "max_features": ("sqrt", _max_features, "'sqrt', 'all' or a positive integer"),
        "bootstrap": (True, _bool, "boolean"),
    },
    "adaboost": {
        "n_estimators": (100, _pos_int, "positive integer"),
        "max_depth": (1, _pos_int, "positive integer"),
        "learning_rate": (1.0, _pos_real, "positive real"),
    },
    "gbt": {
        "rounds": (150, _pos_int, "positive integer"),
        "depth": (6, _pos_int, "positive integer"),
        "learning_rate": (0.3, _pos_real, "positive real"),
        "lambda": (1.0, _nonneg_real, "non-negative real"),
    },
    "svm": {
        "C": (1.0, _pos_real, "positive real"),
        "gamma": (None, _optional_pos_real, "positive real or null (1/n_features)"),
        "tol": (1e-3, _pos_real, "positive real"),
        "standardize": (True, _bool, "boolean"),
    },
    "mlp": {
        "learning_rate": (0.01, _pos_real, "positive real"),
        "epochs": (200, _pos_int, "positive integer"),
        "batch": (32, _pos_int, "positive integer"),
        "momentum": (0.9, _momentum, "real in [0, 1)"),
        "hidden": ((64, 32), _hidden, "list of positive integers"),
        "standardize": (True, _bool, "boolean"),
    },
}


def _normalize(value):
    if isinstance(value, float) and math.isinf(value):
        return None  # unlimited depth written as inf in grids
    if isinstance(value, list):
        return tuple(value)
    return value


@dataclass(frozen=True)
class ModelSpec:
    kind: str
    hyperparameters: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in SCHEMAS:
            raise ValidationError(f"unknown model kind {self.kind!r}; expected one of {KINDS}")
        schema = SCHEMAS[self.kind]
        unknown = set(self.hyperparameters) - set(schema)
        if unknown:
            raise ValidationError(f"{self.kind}: unknown hyperparameters {sorted(unknown)}")
        full = {}
        for name, (default, check, desc) in schema.items():
            value = _normalize(self.hyperparameters.get(name, default))
            if isinstance(value, float) and value.is_integer() and isinstance(default, int) \
                    and not isinstance(default, bool):
                value = int(value)
            if not check(value):
                raise ValidationError(f"{self.kind}: {name}={value!r} is invalid (expected {desc})")
            full[name] = value
        object.__setattr__(self, "hyperparameters", full)

    def __getitem__(self, name: str):
        return self.hyperparameters[name]

    def with_params(self, **params) -> "ModelSpec":
        return ModelSpec(self.kind, {**self.hyperparameters, **params}, self.seed)

    def to_dict(self) -> dict:
        hp = {k: list(v) if isinstance(v, tuple) else v for k, v in self.hyperparameters.items()}
        return {"kind": self.kind, "hyperparameters": hp, "seed": self.seed}

    @classmethod
    def from_dict(cls, d: dict) -> "ModelSpec":
        return cls(d["kind"], dict(d.get("hyperparameters", {})), int(d.get("seed", 0)))

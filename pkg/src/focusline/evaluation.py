"""Accuracy, confusion matrices, one-vs-rest ROC curves and report files."""

from __future__ import annotations

import csv
import datetime as _dt
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .features import FeatureTable
from .models import ShapeError, TrainedModel
from .select_tune import SweepResult
from .types import ConcentrationLabel, N_CLASSES, ValidationError

REPORT_SCHEMA_VERSION = 1
TIMESTAMP_FIELDS = ("generated_at",)


def accuracy(y_true, y_pred) -> float:
    y_true, y_pred = np.asarray(y_true), np.asarray(y_pred)
    if y_true.shape != y_pred.shape:
        raise ShapeError(f"length mismatch: {y_true.shape} vs {y_pred.shape}")
    if y_true.size == 0:
        raise ShapeError("accuracy of an empty label vector is undefined")
    return float(np.mean(y_true == y_pred))


def confusion(y_true, y_pred, n_classes: int = N_CLASSES) -> np.ndarray:
    """Counts with rows = true class and columns = predicted class."""
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    if y_true.shape != y_pred.shape:
        raise ShapeError(f"length mismatch: {y_true.shape} vs {y_pred.shape}")
    for y in (y_true, y_pred):
        if np.any((y < 0) | (y >= n_classes)):
            raise ValidationError(f"labels must lie in 0..{n_classes - 1}")
    return np.bincount(y_true * n_classes + y_pred, minlength=n_classes ** 2).reshape(n_classes, n_classes)


@dataclass
class RocCurve:
    fpr: np.ndarray
    tpr: np.ndarray
    auc: float

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.fpr.tolist(), self.tpr.tolist()))


def roc_curve(scores, positive) -> RocCurve | None:
    """ROC of one score column; ``None`` if either class is missing.

    Rows sharing a score form one step, and the area is accumulated on
    integer counts so that perfect separation yields exactly 1.0.
    """
    s = np.asarray(scores, dtype=np.float64)
    pos = np.asarray(positive, dtype=bool)
    P = int(pos.sum())
    N = pos.size - P
    if P == 0 or N == 0:
        return None
    order = np.argsort(-s, kind="stable")
    s, pos = s[order], pos[order]
    ends = np.r_[np.flatnonzero(np.diff(s) != 0), s.size - 1]
    tp = np.r_[0, np.cumsum(pos)[ends]]
    fp = np.r_[0, np.cumsum(~pos)[ends]]
    area2 = int(np.sum(np.diff(fp) * (tp[1:] + tp[:-1])))
    return RocCurve(fp / N, tp / P, area2 / (2.0 * P * N))


def roc_ovr(scores, y_true) -> list[RocCurve | None]:
    """One-vs-rest ROC per class column."""
    scores = np.asarray(scores, dtype=np.float64)
    y_true = np.asarray(y_true)
    return [roc_curve(scores[:, k], y_true == k) for k in range(scores.shape[1])]


def macro_auc(curves: Sequence[RocCurve | None]) -> float | None:
    aucs = [c.auc for c in curves if c is not None]
    return float(np.mean(aucs)) if aucs else None


@dataclass
class EvalReport:
    model_kind: str
    accuracy: float
    confusion: np.ndarray
    roc: list[RocCurve | None]
    macro_auc: float | None
    hyperparameters: dict = field(default_factory=dict)
    feature_subset: list[int] = field(default_factory=list)
    sweep: SweepResult | None = None
    seed: int = 0
    provenance: dict = field(default_factory=dict)
    generated_at: str = ""

    def __post_init__(self):
        total = int(self.confusion.sum())
        if total and abs(self.accuracy - np.trace(self.confusion) / total) > 1e-12:
            raise ValidationError("accuracy disagrees with the confusion matrix")

    def to_dict(self) -> dict:
        return {
            "schema_version": REPORT_SCHEMA_VERSION,
            "model_kind": self.model_kind,
            "accuracy": self.accuracy,
            "confusion": self.confusion.tolist(),
            "auc": {ConcentrationLabel(k).name: (c.auc if c is not None else None)
                    for k, c in enumerate(self.roc)},
            "macro_auc": self.macro_auc,
            "hyperparameters": {k: list(v) if isinstance(v, tuple) else v
                                for k, v in self.hyperparameters.items()},
            "feature_subset": list(self.feature_subset),
            "sweep": None if self.sweep is None else {
                "k": self.sweep.ks, "accuracy": self.sweep.accuracies,
                "best_k": self.sweep.best_k, "best_accuracy": self.sweep.best_accuracy},
            "seed": self.seed,
            "provenance": self.provenance,
            "generated_at": self.generated_at,
        }


def evaluate(model: TrainedModel, test: FeatureTable, *, sweep: SweepResult | None = None,
             seed: int | None = None, provenance: dict | None = None) -> EvalReport:
    """Score ``model`` on a full-width test table."""
    X = model.project(test.X)
    proba = model.predict_proba(X)
    pred = proba.argmax(axis=1)
    curves = roc_ovr(proba, test.labels)
    return EvalReport(model_kind=model.kind, accuracy=accuracy(test.labels, pred),
                      confusion=confusion(test.labels, pred), roc=curves, macro_auc=macro_auc(curves),
                      hyperparameters=dict(model.spec.hyperparameters),
                      feature_subset=list(model.feature_subset), sweep=sweep,
                      seed=model.spec.seed if seed is None else seed,
                      provenance=dict(provenance or {}),
                      generated_at=_dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"))


def file_sha256(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _write_csv(path: Path, header: list[str], rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _plot_roc(report: EvalReport, path: Path):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    with plt.rc_context({"svg.hashsalt": "focusline", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(5, 5))
        ax.plot([0, 1], [0, 1], color="0.7", lw=1, ls="--")
        for k, c in enumerate(report.roc):
            if c is not None:
                ax.plot(c.fpr, c.tpr, lw=1.5,
                        label=f"{ConcentrationLabel(k).name} (AUC {c.auc:.3f})")
        ax.set_xlabel("false positive rate")
        ax.set_ylabel("true positive rate")
        ax.set_title(f"{report.model_kind}: one-vs-rest ROC")
        ax.legend(loc="lower right", fontsize=8)
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)


def _plot_sweep(sweep: SweepResult, kind: str, path: Path):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    with plt.rc_context({"svg.hashsalt": "focusline", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(5, 3.5))
        ax.plot(sweep.ks, sweep.accuracies, marker="o")
        ax.set_xticks(sweep.ks)
        ax.set_xlabel("number of selected features")
        ax.set_ylabel("validation accuracy")
        ax.set_title(kind)
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)


def write_report(report: EvalReport, out_dir: str | Path) -> list[Path]:
    """Write ``report.json``, CSV tables and SVG plots into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    path = out / "report.json"
    path.write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")
    written.append(path)

    path = out / "confusion.csv"
    _write_csv(path, ["true\\pred"] + [c.name for c in ConcentrationLabel],
               [[ConcentrationLabel(k).name] + row for k, row in enumerate(report.confusion.tolist())])
    written.append(path)

    for k, curve in enumerate(report.roc):
        if curve is None:
            continue
        path = out / f"roc_{ConcentrationLabel(k).name}.csv"
        _write_csv(path, ["fpr", "tpr"], [[repr(x), repr(y)] for x, y in curve.points])
        written.append(path)

    if report.sweep is not None:
        path = out / "sweep.csv"
        _write_csv(path, ["k", "accuracy"], [[k, repr(a)] for k, a in report.sweep.rows()])
        written.append(path)
        path = out / "sweep.svg"
        _plot_sweep(report.sweep, report.model_kind, path)
        written.append(path)

    path = out / "roc.svg"
    _plot_roc(report, path)
    written.append(path)
    return written


def write_sweep_csv(sweep: SweepResult, path: str | Path):
    _write_csv(Path(path), ["k", "accuracy"], [[k, repr(a)] for k, a in sweep.rows()])


def strip_timestamps(report_json: str) -> dict:
    d = json.loads(report_json)
    for key in TIMESTAMP_FIELDS:
        d.pop(key, None)
    return d

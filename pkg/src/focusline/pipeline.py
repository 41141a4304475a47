"""End-to-end orchestration from sessions to per-model evaluation reports.

Every stage draws its randomness from a seed derived from the master seed
and the stage name: the first 8 bytes (big-endian) of
``blake2b(f"{master_seed}/{stage}")``. Re-running one stage in isolation
therefore reproduces the same random stream as a full run.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import yaml

from . import __version__
from .dataset import SplitSpec, class_histogram, split
from .evaluation import EvalReport, evaluate, file_sha256, write_report, write_sweep_csv
from .features import WindowConfig, build_feature_table, write_table_csv
from .ingest import format_session_csv, load_session_csv
from .models import KINDS, ModelSpec, save_model
from .preprocess import preprocess, write_series_csv
from .select_tune import DEFAULT_GRIDS, grid_search, rank_features, sweep_top_k
from .synth import SynthConfig, generate, preset
from .types import ConcentrationLabel, FocuslineError, Modality, ValidationError

log = logging.getLogger(__name__)

CONFIG_SCHEMA_VERSION = 1
SEED_ENV = "FOCUSLINE_SEED"


def derive_seed(master: int, stage: str) -> int:
    digest = hashlib.blake2b(f"{master}/{stage}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big")


class StageError(FocuslineError):
    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


class MissingPathError(FocuslineError):
    def __init__(self, path: Path):
        super().__init__(f"path does not exist: {path}")
        self.path = path


@dataclass(frozen=True)
class SessionSource:
    file: Path
    label: ConcentrationLabel
    modality: Modality


@dataclass
class PipelineConfig:
    out_dir: Path = Path("focusline-run")
    seed: int = 42
    sessions: list[SessionSource] = field(default_factory=list)
    synth: SynthConfig = field(default_factory=SynthConfig)
    window: WindowConfig = field(default_factory=WindowConfig)
    split: SplitSpec = field(default_factory=SplitSpec)
    rescale_scope: str = "global"
    models: tuple[str, ...] = KINDS
    grids: dict[str, dict[str, list]] = field(default_factory=lambda: dict(DEFAULT_GRIDS))
    ranking_trees: int = 400

    def validate(self):
        for s in self.sessions:
            if not s.file.exists():
                raise MissingPathError(s.file)
        unknown = set(self.models) - set(KINDS)
        if unknown:
            raise ValidationError(f"unknown model kinds {sorted(unknown)}")
        if self.rescale_scope not in ("global", "recording"):
            raise ValidationError(f"unknown rescale scope {self.rescale_scope!r}")

    @classmethod
    def from_preset(cls, name: str, seed: int = 42, **kwargs) -> "PipelineConfig":
        return cls(seed=seed, synth=preset(name), **kwargs)

    @classmethod
    def from_dict(cls, d: dict, base_dir: Path = Path(".")) -> "PipelineConfig":
        version = d.get("schema_version", CONFIG_SCHEMA_VERSION)
        if version != CONFIG_SCHEMA_VERSION:
            raise ValidationError(f"unsupported config schema_version {version!r}")
        known = {"schema_version", "out_dir", "seed", "sessions", "synth", "window", "split",
                 "rescale_scope", "models", "grids", "ranking_trees"}
        unknown = set(d) - known
        if unknown:
            raise ValidationError(f"unknown config keys {sorted(unknown)}")
        cfg = cls()
        if "out_dir" in d:
            cfg.out_dir = base_dir / d["out_dir"]
        cfg.seed = int(d.get("seed", cfg.seed))
        cfg.sessions = [SessionSource(base_dir / s["file"], ConcentrationLabel(int(s["label"])),
                                      Modality.parse(s.get("modality", "non-vr")))
                        for s in d.get("sessions", [])]
        synth = dict(d.get("synth", {}))
        name = synth.pop("preset", "easy")
        if "class_signatures" in synth:
            synth["class_signatures"] = tuple(tuple(r) for r in synth["class_signatures"])
        if "modality" in synth:
            synth["modality"] = Modality.parse(synth["modality"])
        cfg.synth = preset(name, **synth)
        cfg.window = WindowConfig(**d.get("window", {}))
        cfg.split = SplitSpec(**d.get("split", {}))
        cfg.rescale_scope = d.get("rescale_scope", cfg.rescale_scope)
        cfg.models = tuple(d.get("models", KINDS))
        cfg.grids = {**DEFAULT_GRIDS, **d.get("grids", {})}
        cfg.ranking_trees = int(d.get("ranking_trees", cfg.ranking_trees))
        return cfg

    @classmethod
    def load(cls, path: str | Path) -> "PipelineConfig":
        path = Path(path)
        if not path.exists():
            raise MissingPathError(path)
        data = yaml.safe_load(path.read_text()) or {}
        return cls.from_dict(data, path.parent)


def apply_seed_override(cfg: PipelineConfig, environ=os.environ) -> PipelineConfig:
    if environ.get(SEED_ENV):
        cfg.seed = int(environ[SEED_ENV])
    return cfg


@dataclass
class ModelSummary:
    kind: str
    all_features_acc: float
    best_k: int
    after_selection_acc: float
    tuned_acc: float
    chosen: dict
    test_acc: float
    test_macro_auc: float | None


def format_summary(rows: list[ModelSummary]) -> str:
    head = (f"{'model':<14} {'all_feat':>8} {'best_k':>6} {'selected':>8} {'tuned':>8} "
            f"{'test':>8} {'test_auc':>8}")
    lines = [head, "-" * len(head)]
    for r in rows:
        auc = f"{r.test_macro_auc:.4f}" if r.test_macro_auc is not None else "n/a"
        lines.append(f"{r.kind:<14} {r.all_features_acc:>8.4f} {r.best_k:>6d} "
                     f"{r.after_selection_acc:>8.4f} {r.tuned_acc:>8.4f} {r.test_acc:>8.4f} {auc:>8}")
    return "\n".join(lines)


def _stage(name: str, fn: Callable, *args, **kwargs):
    t0 = time.perf_counter()
    try:
        result = fn(*args, **kwargs)
    except FocuslineError as exc:
        raise StageError(name, exc) from exc
    except OSError as exc:
        raise StageError(name, exc) from exc
    log.info("stage %s done in %.2f s", name, time.perf_counter() - t0)
    return result


def _jsonable(v):
    return list(v) if isinstance(v, tuple) else v


@dataclass
class PipelineResult:
    reports: dict[str, EvalReport]
    summaries: list[ModelSummary]
    out_dir: Path

    @property
    def summary_text(self) -> str:
        return format_summary(self.summaries)


def run_pipeline(cfg: PipelineConfig, echo: Callable[[str], None] | None = None) -> PipelineResult:
    """Run every stage and write all intermediate artifacts below ``cfg.out_dir``."""
    cfg.validate()
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    seed = cfg.seed

    def _ingest():
        if cfg.sessions:
            return [load_session_csv(s.file, label=s.label, modality=s.modality) for s in cfg.sessions]
        synth_cfg = dataclasses.replace(cfg.synth, seed=derive_seed(seed, "synth"))
        recs = generate(synth_cfg)
        # round-trip through the export format so the run exercises the CSV parser
        session_dir = out / "sessions"
        session_dir.mkdir(exist_ok=True)
        manifest, parsed = [], []
        for rec in recs:
            path = session_dir / f"{rec.id}.csv"
            path.write_text(format_session_csv(rec))
            manifest.append({"file": path.name, "label": int(rec.label), "modality": rec.modality.value})
            parsed.append(load_session_csv(path, label=rec.label, modality=rec.modality))
        (session_dir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
        return parsed

    recordings = _stage("ingest", _ingest)
    series = _stage("preprocess", preprocess, recordings, cfg.rescale_scope)
    series_dir = out / "series"
    series_dir.mkdir(exist_ok=True)
    for s in series:
        write_series_csv(s, series_dir / f"{s.recording_id}.csv")

    table = _stage("features", build_feature_table, series, cfg.window)
    write_table_csv(table, out / "features.csv")

    data = _stage("split", split, table, dataclasses.replace(cfg.split, seed=derive_seed(seed, "split")))
    split_dir = out / "split"
    split_dir.mkdir(exist_ok=True)
    for name in ("train", "val", "test"):
        write_table_csv(getattr(data, name), split_dir / f"{name}.csv")
    provenance = {f"{name}.csv": file_sha256(split_dir / f"{name}.csv") for name in ("train", "val", "test")}
    provenance["class_histogram_train"] = class_histogram(data.train).tolist()

    ranking = _stage("rank", rank_features, data.train, derive_seed(seed, "rank"), cfg.ranking_trees)
    (out / "ranking.json").write_text(json.dumps(ranking.to_dict(), indent=2) + "\n")

    reports: dict[str, EvalReport] = {}
    summaries: list[ModelSummary] = []
    for kind in cfg.models:
        model_seed = derive_seed(seed, f"model/{kind}")
        sweep = _stage(f"sweep-k/{kind}", sweep_top_k, ModelSpec(kind, {}, model_seed), ranking,
                       data.train, data.val)
        tune = _stage(f"tune/{kind}", grid_search, kind, cfg.grids.get(kind), sweep.best_k, ranking,
                      data.train, data.val, model_seed)
        model = tune.model
        kind_dir = out / kind
        kind_dir.mkdir(exist_ok=True)
        write_sweep_csv(sweep, kind_dir / "sweep.csv")
        (kind_dir / "tune.json").write_text(json.dumps({
            "k": tune.k,
            "points": [{k: _jsonable(v) for k, v in p.items()} for p in tune.points],
            "accuracies": tune.accuracies,
            "chosen": {k: _jsonable(v) for k, v in tune.chosen.items()},
        }, indent=2) + "\n")
        save_model(model, kind_dir / "model.json")
        report = _stage(f"evaluate/{kind}", evaluate, model, data.test, sweep=sweep, seed=seed,
                        provenance=provenance)
        _stage(f"report/{kind}", write_report, report, kind_dir / "report")
        reports[kind] = report
        summaries.append(ModelSummary(kind, sweep.accuracies[-1], sweep.best_k, sweep.best_accuracy,
                                      tune.chosen_accuracy, dict(tune.chosen), report.accuracy,
                                      report.macro_auc))
        if echo:
            echo(f"{kind}: best_k={sweep.best_k} tuned={tune.chosen_accuracy:.4f} test={report.accuracy:.4f}")

    result = PipelineResult(reports, summaries, out)
    (out / "summary.txt").write_text(
        f"focusline {__version__} seed={seed}\n" + result.summary_text + "\n")
    return result

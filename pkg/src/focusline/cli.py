"""``focusline`` command-line interface."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import yaml

from . import __version__
from .dataset import SplitSpec, split
from .evaluation import evaluate, write_report, write_sweep_csv
from .features import WindowConfig, build_feature_table, read_table_csv, write_table_csv
from .ingest import format_session_csv, listen_udp, load_session_csv
from .models import KINDS, ModelSpec, fit, load_model, save_model
from .pipeline import (CONFIG_SCHEMA_VERSION, SEED_ENV, PipelineConfig, apply_seed_override,
                       run_pipeline)
from .preprocess import preprocess, read_series_csv, write_series_csv
from .select_tune import FeatureRanking, grid_search, rank_features, sweep_top_k
from .synth import PRESETS, generate, preset, stream_osc
from .types import ConcentrationLabel, FocuslineError, Modality, Recording

log = logging.getLogger("focusline")


def version_info() -> str:
    return f"focusline {__version__} (config schema {CONFIG_SCHEMA_VERSION})"


def _label(text: str) -> ConcentrationLabel:
    try:
        return ConcentrationLabel(int(text))
    except ValueError:
        raise argparse.ArgumentTypeError(f"label must be 0, 1 or 2, got {text!r}") from None


def _modality(text: str) -> Modality:
    try:
        return Modality.parse(text)
    except FocuslineError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _load_mapping(path: str | None) -> dict:
    if path is None:
        return {}
    p = Path(path)
    if not p.exists():
        raise FocuslineError(f"path does not exist: {p}")
    return yaml.safe_load(p.read_text()) or {}


def _write_recording(rec: Recording, out: str | None):
    if out:
        Path(out).write_text(json.dumps(rec.to_dict()) + "\n")
    n_bad = int(rec.bad.sum())
    print(f"{rec.id}: {len(rec)} samples, {rec.timestamps[-1]:.3f} s, {n_bad} bad entries")


def _read_recording(path: str) -> Recording:
    text = Path(path).read_text()
    return Recording.from_dict(json.loads(text))


def _ranking(args, train) -> FeatureRanking:
    if getattr(args, "ranking", None):
        return FeatureRanking.from_dict(json.loads(Path(args.ranking).read_text()))
    return rank_features(train, args.seed)


def cmd_ingest_csv(args):
    rec = load_session_csv(args.file, label=args.label, modality=args.modality,
                           **({"recording_id": args.id} if args.id else {}))
    _write_recording(rec, args.out)


def cmd_listen_osc(args):
    rec = listen_udp(args.port, args.seconds, args.rate, host=args.host, label=args.label,
                     modality=args.modality, recording_id=args.id)
    _write_recording(rec, args.out)


def cmd_preprocess(args):
    recs = [_read_recording(p) for p in args.inputs]
    series = preprocess(recs, args.scope)
    out = Path(args.out)
    if len(series) == 1 and out.suffix:
        write_series_csv(series[0], out)
        return
    out.mkdir(parents=True, exist_ok=True)
    for s in series:
        write_series_csv(s, out / f"{s.recording_id}.csv")


def cmd_features(args):
    cfg = WindowConfig(args.window, args.hop, args.min_points)
    table = build_feature_table([read_series_csv(p) for p in args.inputs], cfg)
    write_table_csv(table, args.out)
    print(f"{len(table)} rows x {table.X.shape[1]} features -> {args.out}")


def cmd_split(args):
    data = split(read_table_csv(args.inputs), SplitSpec(seed=args.seed))
    out = Path(args.out_prefix)
    out.mkdir(parents=True, exist_ok=True)
    for name in ("train", "val", "test"):
        write_table_csv(getattr(data, name), out / f"{name}.csv")
    print("train/val/test sizes: %d/%d/%d" % data.sizes)


def cmd_train(args):
    train = read_table_csv(args.train)
    spec = ModelSpec(args.model, _load_mapping(args.params), args.seed)
    subset = None
    if args.k is not None:
        subset = _ranking(args, train).top(args.k)
    model = fit(spec, train.X, train.labels, subset)
    save_model(model, args.out)
    print(f"trained {args.model} on {len(train)} rows, {len(model.feature_subset)} features -> {args.out}")


def cmd_sweep_k(args):
    train, val = read_table_csv(args.train), read_table_csv(args.val)
    ranking = _ranking(args, train)
    res = sweep_top_k(ModelSpec(args.model, _load_mapping(args.params), args.seed), ranking, train, val)
    write_sweep_csv(res, args.out)
    for k, a in res.rows():
        print(f"k={k:>2d} accuracy={a:.4f}")
    print(f"best_k={res.best_k} best_accuracy={res.best_accuracy:.4f}")


def cmd_tune(args):
    train, val = read_table_csv(args.train), read_table_csv(args.val)
    ranking = _ranking(args, train)
    grid = _load_mapping(args.grid) or None
    res = grid_search(args.model, grid, args.k, ranking, train, val, args.seed)
    for p, a in zip(res.points, res.accuracies):
        print(f"{p} accuracy={a:.4f}")
    print(f"chosen {res.chosen} accuracy={res.chosen_accuracy:.4f}")
    if args.out:
        Path(args.out).write_text(json.dumps({
            "k": res.k, "points": res.points, "accuracies": res.accuracies,
            "chosen": res.chosen}, indent=2, default=list) + "\n")
    if args.model_out:
        save_model(res.model, args.model_out)


def cmd_evaluate(args):
    model = load_model(args.model)
    report = evaluate(model, read_table_csv(args.test))
    write_report(report, args.out)
    print(f"accuracy={report.accuracy:.4f} macro_auc={report.macro_auc}")


def cmd_synth(args):
    cfg = preset(args.preset, seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    manifest = []
    for rec in generate(cfg):
        (out / f"{rec.id}.csv").write_text(format_session_csv(rec))
        manifest.append({"file": f"{rec.id}.csv", "label": int(rec.label),
                         "modality": rec.modality.value})
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    print(f"wrote {len(manifest)} sessions to {out}")


def cmd_synth_stream(args):
    cfg = preset(args.preset, seed=args.seed)
    n = stream_osc(cfg, args.port, args.factor, host=args.host,
                   recordings=args.recording if args.recording else None)
    print(f"sent {n} datagrams")


def cmd_pipeline(args):
    cfg = PipelineConfig.load(args.config) if args.config else PipelineConfig.from_preset(args.preset)
    apply_seed_override(cfg)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out:
        cfg.out_dir = Path(args.out)
    if args.models:
        cfg.models = tuple(args.models)
    result = run_pipeline(cfg, echo=lambda s: print(s, file=sys.stderr))
    print(result.summary_text)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="focusline", description=__doc__)
    p.add_argument("--version", action="version", version=version_info())
    p.add_argument("-v", "--verbose", action="store_true", help="log stage progress")
    sub = p.add_subparsers(dest="command", required=True)

    def labelled(sp):
        sp.add_argument("--label", type=_label, required=True, help="0 fully, 1 moderately, 2 not concentrated")
        sp.add_argument("--modality", type=_modality, required=True, help="vr or non-vr")

    s = sub.add_parser("ingest-csv", help="parse a band-power CSV export")
    s.add_argument("--file", required=True)
    labelled(s)
    s.add_argument("--id")
    s.add_argument("--out", help="write the recording as JSON")
    s.set_defaults(func=cmd_ingest_csv)

    s = sub.add_parser("listen-osc", help="record OSC band updates from UDP")
    s.add_argument("--port", type=int, required=True)
    s.add_argument("--seconds", type=float, required=True)
    s.add_argument("--rate", type=float, default=10.0, help="assembly rate in Hz")
    s.add_argument("--host", default="127.0.0.1")
    s.add_argument("--id", default="live")
    labelled(s)
    s.add_argument("--out")
    s.set_defaults(func=cmd_listen_osc)

    s = sub.add_parser("preprocess", help="forward fill, average electrodes, rescale")
    s.add_argument("--in", dest="inputs", nargs="+", required=True, help="recording JSON files")
    s.add_argument("--out", required=True, help="series CSV (one input) or directory")
    s.add_argument("--scope", choices=("global", "recording"), default="global")
    s.set_defaults(func=cmd_preprocess)

    s = sub.add_parser("features", help="windowed feature table from series files")
    s.add_argument("--in", dest="inputs", nargs="+", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--window", type=float, default=10.0)
    s.add_argument("--hop", type=float, default=0.5)
    s.add_argument("--min-points", type=int, default=8)
    s.set_defaults(func=cmd_features)

    s = sub.add_parser("split", help="recording-aware 60/20/20 split")
    s.add_argument("--in", dest="inputs", required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out-prefix", required=True)
    s.set_defaults(func=cmd_split)

    def model_args(sp, with_val=True):
        sp.add_argument("--model", choices=KINDS, required=True)
        sp.add_argument("--train", required=True)
        if with_val:
            sp.add_argument("--val", required=True)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--ranking", help="ranking JSON; computed from --train when omitted")

    s = sub.add_parser("train", help="fit one model")
    model_args(s, with_val=False)
    s.add_argument("--params", help="YAML/JSON hyperparameter file")
    s.add_argument("--k", type=int, help="train on the top-k ranked features")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("sweep-k", help="validation accuracy over top-k feature counts")
    model_args(s)
    s.add_argument("--params")
    s.add_argument("--out", required=True, help="sweep CSV (k,accuracy)")
    s.set_defaults(func=cmd_sweep_k)

    s = sub.add_parser("tune", help="grid search on the top-k features")
    model_args(s)
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--grid", help="YAML/JSON mapping of parameter -> value list")
    s.add_argument("--out")
    s.add_argument("--model-out")
    s.set_defaults(func=cmd_tune)

    s = sub.add_parser("evaluate", help="score a model on a test table")
    s.add_argument("--model", required=True)
    s.add_argument("--test", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("synth", help="write synthetic session CSVs")
    s.add_argument("--preset", choices=sorted(PRESETS), default="easy")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("synth-stream", help="stream synthetic sessions as OSC over UDP")
    s.add_argument("--port", type=int, required=True)
    s.add_argument("--factor", type=float, default=1.0, help="realtime speed-up")
    s.add_argument("--preset", choices=sorted(PRESETS), default="easy")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--host", default="127.0.0.1")
    s.add_argument("--recording", type=int, nargs="*", help="indices of sessions to send")
    s.set_defaults(func=cmd_synth_stream)

    s = sub.add_parser("pipeline", help="run every stage end to end")
    s.add_argument("--config", help="YAML pipeline config")
    s.add_argument("--preset", choices=sorted(PRESETS), default="easy")
    s.add_argument("--seed", type=int, help=f"master seed (overrides ${SEED_ENV} and config)")
    s.add_argument("--out")
    s.add_argument("--models", nargs="+", choices=KINDS)
    s.set_defaults(func=cmd_pipeline)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except FocuslineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

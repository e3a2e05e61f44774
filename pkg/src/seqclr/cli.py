"""Command-line lifecycle driver: synth, pretrain, finetune, eval, predict,
ablate, and serve verbs with a stable exit-code contract (0 ok, 1 runtime
failure, 2 usage error). Every run logs its resolved config and seed; the
SEQCLR_LOG env var sets the log level."""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .ablate import AblationScale, attention_method_grid, format_table, temperature_grid
from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .dataio import (DataError, SyntheticSpec, generate_synthetic, load_manifest,
                     read_frame_sequence, split_dataset, write_manifest)
from .layers import ATTENTION_KINDS, ModelConfig, build_model, count_parameters
from .metrics import benchmark_inference, evaluate, roc_points_csv
from .pairs import PAIR_KINDS
from .service import (DEFAULT_MAX_BYTES, checkpoint_model_id, classify_sequence,
                      serve)
from .tensor import Rng
from .trainer import (TrainConfig, TrainingError, finetune, flatten_windows,
                      predict_logits, pretrain, stratified_validation_split,
                      videos_from_manifest)

logger = logging.getLogger("seqclr.cli")

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

_TRAIN_KEYS = {f.name for f in dataclasses.fields(TrainConfig)}


class UsageError(ValueError):
    """Bad flags, unknown config keys, or invalid values (exit 2)."""


def _setup_logging() -> None:
    level = os.environ.get("SEQCLR_LOG", "INFO").upper()
    logging.basicConfig(level=getattr(logging, level, logging.INFO),
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")


def _parse_override(text: str) -> tuple[str, object]:
    key, sep, raw = text.partition("=")
    if not sep or not key:
        raise UsageError(f"override {text!r} is not KEY=VALUE")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key, value


def resolve_train_config(args, epochs_field: str) -> TrainConfig:
    """Merge config file, --set overrides, and direct flags into a TrainConfig."""
    merged: dict = {}
    if getattr(args, "config", None):
        path = Path(args.config)
        if not path.exists():
            raise UsageError(f"config file not found: {path}")
        try:
            merged.update(json.loads(path.read_text()))
        except json.JSONDecodeError as e:
            raise UsageError(f"config file {path} is not valid JSON: {e}") from None
    for item in getattr(args, "set", None) or []:
        key, value = _parse_override(item)
        merged[key] = value
    flag_map = {"method": "method", "loss": "loss", "attention": "attention",
                "tau": "temperature", "margin": "margin", "seed": "seed"}
    for flag, key in flag_map.items():
        value = getattr(args, flag, None)
        if value is not None:
            merged[key] = value
    if getattr(args, "epochs", None) is not None:
        merged[epochs_field] = args.epochs
    unknown = set(merged) - _TRAIN_KEYS
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))} "
                         f"(known: {', '.join(sorted(_TRAIN_KEYS))})")
    try:
        return TrainConfig(**merged)
    except (TypeError, ValueError) as e:
        raise UsageError(f"invalid training configuration: {e}") from None


def _log_config(verb: str, cfg: TrainConfig) -> None:
    logger.info("%s config: %s", verb, json.dumps(dataclasses.asdict(cfg),
                                                  sort_keys=True))
    logger.info("%s seed: %d", verb, cfg.seed)


def _history_writer(path: Path):
    fh = path.open("w")

    def log(rec: dict) -> None:
        fh.write(json.dumps(rec) + "\n")
        fh.flush()
        logger.info("%s epoch %d loss %.6f val %s", rec["phase"], rec["epoch"],
                    rec["loss"], "-" if rec["val_loss"] is None
                    else f"{rec['val_loss']:.6f}")

    return log, fh


def _model_dtype(args) -> str:
    return getattr(args, "precision", None) or "float32"


def cmd_synth(args) -> int:
    spec = SyntheticSpec(per_class=args.per_class, frames=args.frames,
                         noise_sigma=args.noise_sigma)
    out = Path(args.out)
    logger.info("synth config: %s seed: %d",
                json.dumps(dataclasses.asdict(spec)), args.seed)
    manifest = generate_synthetic(spec, args.seed, out)
    train, test = split_dataset(manifest, test_fraction=args.test_fraction,
                                seed=args.seed)
    write_manifest(train, out / "train_manifest.jsonl")
    write_manifest(test, out / "test_manifest.jsonl")
    print(json.dumps({"out": str(out), "videos": len(manifest.entries),
                      "train": len(train.entries), "test": len(test.entries),
                      "manifest": str(out / "manifest.jsonl"),
                      "train_manifest": str(out / "train_manifest.jsonl"),
                      "test_manifest": str(out / "test_manifest.jsonl")}))
    return EXIT_OK


def cmd_pretrain(args) -> int:
    cfg = resolve_train_config(args, "pretrain_epochs")
    _log_config("pretrain", cfg)
    manifest = load_manifest(args.data)
    videos = videos_from_manifest(manifest)
    model = build_model(ModelConfig(attention=cfg.attention,
                                    dtype=_model_dtype(args)), Rng(cfg.seed))
    out = Path(args.out)
    log, fh = _history_writer(Path(str(out) + ".log.jsonl"))
    try:
        history = pretrain(model, videos, cfg, log=log)
    finally:
        fh.close()
    save_checkpoint(out, model, metadata={
        "phase": "pretrain", "seed": cfg.seed,
        "train_config": dataclasses.asdict(cfg), "history": history})
    final = history[-1]["loss"] if history else float("nan")
    logger.info("pretrain done: %d epochs, final loss %.6f -> %s",
                len(history), final, out)
    return EXIT_OK


def cmd_finetune(args) -> int:
    cfg = resolve_train_config(args, "finetune_max_epochs")
    if not 0.0 < args.label_fraction <= 1.0:
        raise UsageError("--label-fraction must lie in (0, 1]")
    _log_config("finetune", cfg)
    manifest = load_manifest(args.data)
    videos = videos_from_manifest(manifest)
    windows, labels = flatten_windows(videos)
    if args.label_fraction < 1.0:
        # stratified subset: models trained on a fraction of the labels
        _, keep = stratified_validation_split(labels, args.label_fraction,
                                              Rng(cfg.seed).child("labels"))
        windows = [windows[i] for i in keep]
        labels = labels[keep]
        logger.info("finetune label subset: %d of %d windows",
                    len(windows), sum(len(v.windows) for v in videos))
    if args.model:
        model, meta = load_checkpoint(args.model)
        logger.info("finetune from checkpoint %s (%s)", args.model,
                    meta.metadata.get("phase", "unknown"))
    else:
        model = build_model(ModelConfig(attention=cfg.attention,
                                        dtype=_model_dtype(args)), Rng(cfg.seed))
        logger.info("finetune from scratch")
    out = Path(args.out)
    log, fh = _history_writer(Path(str(out) + ".log.jsonl"))
    try:
        model, history = finetune(model, windows, labels, cfg, log=log)
    finally:
        fh.close()
    save_checkpoint(out, model, metadata={
        "phase": "finetune", "seed": cfg.seed,
        "train_config": dataclasses.asdict(cfg), "history": history,
        "label_fraction": args.label_fraction})
    logger.info("finetune done: %d epochs, best val %.6f -> %s", len(history),
                min(h["val_loss"] for h in history), out)
    return EXIT_OK


def cmd_eval(args) -> int:
    model, _ = load_checkpoint(args.model)
    manifest = load_manifest(args.data)
    videos = videos_from_manifest(manifest)
    windows, labels = flatten_windows(videos)
    logits, _ = predict_logits(model, windows)
    mean_seconds = None
    if args.benchmark:
        timing = benchmark_inference(lambda: predict_logits(model, windows),
                                     num_sequences=len(windows))
        mean_seconds = timing["mean_sequence_seconds"]
        logger.info("benchmark: %s", json.dumps(timing))
    report = evaluate(logits, labels, parameter_count=count_parameters(model),
                      mean_inference_seconds=mean_seconds)
    print(report.to_text())
    print(json.dumps(report.to_dict()))
    if args.roc_csv:
        Path(args.roc_csv).write_text(roc_points_csv(report.roc_points))
        logger.info("wrote ROC points to %s", args.roc_csv)
    return EXIT_OK


def cmd_predict(args) -> int:
    model, _ = load_checkpoint(args.model)
    seq = read_frame_sequence(args.input)
    result = classify_sequence(model, seq, checkpoint_model_id(args.model))
    print(json.dumps(result.to_dict(), indent=2))
    return EXIT_OK


def cmd_ablate(args) -> int:
    manifest = load_manifest(args.data)
    scale = AblationScale(pretrain_epochs=args.pretrain_epochs,
                          finetune_epochs=args.finetune_epochs)
    logger.info("ablate grids: %s seed: %d scale: %s", args.grid, args.seed,
                json.dumps(dataclasses.asdict(scale)))
    rows = []
    if args.grid in ("tau", "all"):
        rows += temperature_grid(manifest, base_seed=args.seed, scale=scale)
    if args.grid in ("attention", "all"):
        rows += attention_method_grid(manifest, base_seed=args.seed, scale=scale)
    print(format_table(rows))
    if args.out:
        with Path(args.out).open("w") as fh:
            for row in rows:
                fh.write(json.dumps(row) + "\n")
        logger.info("wrote %d ablation rows to %s", len(rows), args.out)
    return EXIT_OK


def cmd_serve(args) -> int:
    serve(args.model, host=args.host, port=args.port, max_bytes=args.max_bytes)
    return EXIT_OK


def _add_train_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file of training configuration values")
    p.add_argument("--seed", type=int, default=None, help="run seed (default 0)")
    p.add_argument("--method", choices=PAIR_KINDS, help="pair strategy")
    p.add_argument("--loss", help="contrastive loss kind")
    p.add_argument("--attention", choices=ATTENTION_KINDS)
    p.add_argument("--tau", type=float, help="contrastive temperature")
    p.add_argument("--margin", type=float, help="triplet margin")
    p.add_argument("--epochs", type=int, help="epoch budget for this phase")
    p.add_argument("--precision", choices=("float32", "float64"),
                   help="model parameter dtype (default float32)")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override any training configuration key")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="seqclr",
        description="Contrastive pretraining and classification for short "
                    "video sequences.")
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("synth", help="render the synthetic 4-class dataset")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--per-class", type=int, default=50, dest="per_class")
    p.add_argument("--frames", type=int, default=40)
    p.add_argument("--noise-sigma", type=float, default=0.05, dest="noise_sigma")
    p.add_argument("--test-fraction", type=float, default=0.25,
                   dest="test_fraction")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("pretrain", help="contrastive pretraining")
    p.add_argument("--data", required=True, help="training manifest")
    p.add_argument("--out", required=True, help="checkpoint path to write")
    _add_train_flags(p)
    p.set_defaults(func=cmd_pretrain)

    p = sub.add_parser("finetune", help="supervised fine-tuning")
    p.add_argument("--data", required=True, help="training manifest")
    p.add_argument("--model", help="checkpoint to start from (omit for scratch)")
    p.add_argument("--out", required=True, help="checkpoint path to write")
    p.add_argument("--label-fraction", type=float, default=1.0,
                   dest="label_fraction",
                   help="stratified fraction of labels to train on")
    _add_train_flags(p)
    p.set_defaults(func=cmd_finetune)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a manifest")
    p.add_argument("--data", required=True, help="evaluation manifest")
    p.add_argument("--model", required=True, help="checkpoint to evaluate")
    p.add_argument("--roc-csv", dest="roc_csv", help="write ROC points as CSV")
    p.add_argument("--benchmark", action="store_true",
                   help="measure inference wall time")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("predict", help="classify one .fsq file or frame dir")
    p.add_argument("--model", required=True, help="checkpoint to use")
    p.add_argument("input", help="path to a .fsq file or a frame directory")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("ablate", help="run reduced-scale ablation grids")
    p.add_argument("--data", required=True, help="dataset manifest")
    p.add_argument("--grid", choices=("tau", "attention", "all"), default="all")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="write rows as JSON lines")
    p.add_argument("--pretrain-epochs", type=int, default=2,
                   dest="pretrain_epochs")
    p.add_argument("--finetune-epochs", type=int, default=3,
                   dest="finetune_epochs")
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("serve", help="run the HTTP inference service")
    p.add_argument("--model", required=True, help="checkpoint to serve")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--max-bytes", type=int, default=DEFAULT_MAX_BYTES,
                   dest="max_bytes", help="request size limit")
    p.set_defaults(func=cmd_serve)

    return parser


def run_cli(argv: list[str] | None = None) -> int:
    """Parse and dispatch; returns the process exit code."""
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    except (DataError, TrainingError, CheckpointError, OSError) as e:
        logger.error("%s", e)
        return EXIT_FAILURE
    except KeyboardInterrupt:
        return EXIT_FAILURE
    except Exception:
        logger.exception("unhandled failure")
        return EXIT_FAILURE


def main(argv: list[str] | None = None) -> int:
    return run_cli(argv)


if __name__ == "__main__":
    sys.exit(main())

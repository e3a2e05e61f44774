#!/usr/bin/env python3
"""Reference-config benchmark: synthesize data, pretrain, finetune, evaluate.

Runs the full protocol over several seeds and prints a per-seed and averaged
summary, including the low-label comparison against a scratch baseline.
"""

import argparse
import json
import time
from pathlib import Path

import numpy as np

from seqclr.checkpoint import load_checkpoint, save_checkpoint
from seqclr.dataio import SyntheticSpec, generate_synthetic, split_dataset
from seqclr.layers import ModelConfig, build_model, count_parameters
from seqclr.metrics import evaluate
from seqclr.tensor import Rng
from seqclr.trainer import (
    TrainConfig,
    finetune,
    flatten_windows,
    predict_logits,
    pretrain,
    stratified_validation_split,
    videos_from_manifest,
)


def accuracy(model, windows, labels):
    logits, _ = predict_logits(model, windows)
    return float((logits.argmax(axis=1) == labels).mean())


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path("benchmark-run"))
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    ap.add_argument("--per-class", type=int, default=50)
    ap.add_argument("--epochs", type=int, default=20)
    ap.add_argument("--label-fraction", type=float, default=0.25,
                    help="labeled share for the low-label comparison")
    args = ap.parse_args()

    args.out.mkdir(parents=True, exist_ok=True)
    manifest = generate_synthetic(SyntheticSpec(per_class=args.per_class, frames=40),
                                  seed=2024, out_dir=args.out / "data")
    train_m, test_m = split_dataset(manifest, test_fraction=0.25, seed=2024)
    train_videos = videos_from_manifest(train_m)
    test_videos = videos_from_manifest(test_m)
    train_windows, train_labels = flatten_windows(train_videos)
    test_windows, test_labels = flatten_windows(test_videos)
    print(f"{len(train_windows)} train / {len(test_windows)} test windows")

    rows = []
    for seed in args.seeds:
        cfg = TrainConfig(seed=seed, pretrain_epochs=args.epochs)
        t0 = time.monotonic()
        model = build_model(ModelConfig(), Rng(seed))
        history = pretrain(model, train_videos, cfg)
        pre_path = args.out / f"pretrain-{seed}.ckpt"
        save_checkpoint(pre_path, model)
        model, _ = finetune(model, train_windows, train_labels, cfg)
        seconds = time.monotonic() - t0
        save_checkpoint(args.out / f"finetune-{seed}.ckpt", model)
        report = evaluate(predict_logits(model, test_windows)[0], test_labels,
                          parameter_count=count_parameters(model))

        _, keep = stratified_validation_split(train_labels, args.label_fraction,
                                              Rng(seed).child("labels"))
        sub_w = [train_windows[i] for i in keep]
        sub_y = train_labels[keep]
        pre_model, _ = load_checkpoint(pre_path)
        pre_model, _ = finetune(pre_model, sub_w, sub_y, cfg)
        scratch = build_model(ModelConfig(), Rng(seed))
        scratch, _ = finetune(scratch, sub_w, sub_y, cfg)

        row = {
            "seed": seed,
            "accuracy": report.accuracy,
            "auc": report.auc,
            "f1": report.f1,
            "seconds": round(seconds, 1),
            "loss_ratio": history[-1]["loss"] / history[0]["loss"],
            "low_label_pretrained": accuracy(pre_model, test_windows, test_labels),
            "low_label_scratch": accuracy(scratch, test_windows, test_labels),
        }
        rows.append(row)
        print(json.dumps(row))

    mean = {k: float(np.mean([r[k] for r in rows]))
            for k in rows[0] if k != "seed"}
    print("mean over seeds:", json.dumps({k: round(v, 4) for k, v in mean.items()}))
    (args.out / "summary.json").write_text(
        json.dumps({"rows": rows, "mean": mean}, indent=2))


if __name__ == "__main__":
    main()

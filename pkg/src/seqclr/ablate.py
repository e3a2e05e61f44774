"""Reduced-scale ablation grids: temperature sweep and attention x method.

Each cell runs the full pretrain -> finetune -> evaluate pipeline on a small
dataset and records its own seed, so any cell can be reproduced in isolation
from its logged row.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .dataio import DatasetManifest, split_dataset
from .layers import ATTENTION_KINDS, ModelConfig, build_model
from .metrics import classification_metrics, confusion_matrix
from .pairs import PAIR_KINDS
from .tensor import Rng
from .trainer import (TrainConfig, finetune, flatten_windows, predict_logits,
                      pretrain, videos_from_manifest)

logger = logging.getLogger("seqclr.ablate")

TAU_GRID = (0.1, 0.4, 0.7, 1.0)


@dataclass(frozen=True)
class AblationScale:
    """Desk-scale knobs: short schedules so a full grid stays tractable."""

    pretrain_epochs: int = 2
    finetune_epochs: int = 3
    patience: int = 3
    test_fraction: float = 0.25
    val_fraction: float = 0.2  # at tiny scale 0.1 can floor to an empty split


def run_cell(manifest: DatasetManifest, *, method: str = "contextual",
             loss: str = "nt_logistic", attention: str = "bahdanau",
             tau: float = 0.1, seed: int = 0,
             scale: AblationScale = AblationScale()) -> dict:
    """One grid cell end to end; deterministic given (manifest, args)."""
    cfg = TrainConfig(method=method, loss=loss, attention=attention,
                      temperature=tau, seed=seed,
                      pretrain_epochs=scale.pretrain_epochs,
                      finetune_max_epochs=scale.finetune_epochs,
                      patience=scale.patience,
                      val_fraction=scale.val_fraction)
    train_manifest, test_manifest = split_dataset(
        manifest, test_fraction=scale.test_fraction, seed=seed)
    train_videos = videos_from_manifest(train_manifest)
    test_videos = videos_from_manifest(test_manifest)
    model = build_model(ModelConfig(attention=attention), Rng(seed))
    history = pretrain(model, train_videos, cfg)
    windows, labels = flatten_windows(train_videos)
    model, _ = finetune(model, windows, labels, cfg)
    test_windows, test_labels = flatten_windows(test_videos)
    logits, _ = predict_logits(model, test_windows)
    cm = confusion_matrix(logits.argmax(axis=1), test_labels)
    cls = classification_metrics(cm)
    return {
        "method": method, "loss": loss, "attention": attention, "tau": tau,
        "seed": seed, "accuracy": cls["accuracy"], "f1": cls["f1"],
        "pretrain_loss_first": history[0]["loss"],
        "pretrain_loss_last": history[-1]["loss"],
    }


def temperature_grid(manifest: DatasetManifest, base_seed: int = 0,
                     scale: AblationScale = AblationScale(),
                     log=None) -> list[dict]:
    """Sweep the contrastive temperature at the reference cell."""
    rows = []
    for i, tau in enumerate(TAU_GRID):
        row = run_cell(manifest, tau=tau, seed=base_seed * 100 + i, scale=scale)
        row["grid"] = "temperature"
        rows.append(row)
        logger.info("temperature cell tau=%.1f seed=%d accuracy=%.4f f1=%.4f",
                    tau, row["seed"], row["accuracy"], row["f1"])
        if log:
            log(row)
    return rows


def attention_method_grid(manifest: DatasetManifest, base_seed: int = 0,
                          scale: AblationScale = AblationScale(),
                          log=None) -> list[dict]:
    """All attention mechanisms crossed with all pair strategies."""
    rows = []
    i = 0
    for attention in ATTENTION_KINDS:
        for method in PAIR_KINDS:
            row = run_cell(manifest, attention=attention, method=method,
                           seed=base_seed * 100 + 10 + i, scale=scale)
            row["grid"] = "attention_method"
            rows.append(row)
            logger.info("grid cell attention=%s method=%s seed=%d "
                        "accuracy=%.4f f1=%.4f", attention, method,
                        row["seed"], row["accuracy"], row["f1"])
            if log:
                log(row)
            i += 1
    return rows


def format_table(rows: list[dict]) -> str:
    """Fixed-width table of the logged cells."""
    header = f"{'grid':17s} {'attention':9s} {'method':10s} {'tau':>4s} " \
             f"{'seed':>6s} {'accuracy':>8s} {'f1':>8s}"
    lines = [header, "-" * len(header)]
    for r in rows:
        lines.append(f"{r['grid']:17s} {r['attention']:9s} {r['method']:10s} "
                     f"{r['tau']:4.1f} {r['seed']:6d} "
                     f"{r['accuracy']:8.4f} {r['f1']:8.4f}")
    return "\n".join(lines)

#!/usr/bin/env python3
"""Microbenchmark: wall time of one pretraining step and of batch inference.

A pretraining step at reference scale is forward, backward, gradient
clipping, and an Adam update over a contextual batch (32 anchors, 64 rows
after augmentation). Inference timing uses the shared benchmark helper and
reports per-sequence latency.
"""

import argparse
import statistics
import tempfile
import time

from seqclr.augment import AugmentConfig
from seqclr.dataio import SyntheticSpec, generate_synthetic
from seqclr.layers import ModelConfig, build_model, count_parameters, encode_batch
from seqclr.losses import contrastive_loss
from seqclr.metrics import benchmark_inference
from seqclr.pairs import make_contextual
from seqclr.tensor import GradTape, Rng, Tensor, backward, clip_global_norm
from seqclr.trainer import (
    AdamState,
    TrainConfig,
    adam_step,
    flatten_windows,
    predict_logits,
    videos_from_manifest,
)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--anchors", type=int, default=32,
                    help="anchor windows per step (rows = 2x this)")
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()

    with tempfile.TemporaryDirectory() as tmp:
        manifest = generate_synthetic(SyntheticSpec(per_class=8, frames=40),
                                      seed=7, out_dir=tmp)
        videos = videos_from_manifest(manifest)

    cfg = TrainConfig()
    model = build_model(ModelConfig(), Rng(cfg.seed))
    params = model.parameters()
    print(f"model: {count_parameters(model):,} parameters")

    need = (args.anchors + 1) // 2  # 2 windows per video
    batch_videos = [v.windows for v in videos[:need]]
    vb = make_contextual(batch_videos, AugmentConfig(), Rng(0).child("bench"))
    print(f"batch: {vb.sequences.shape[0]} rows of shape {vb.sequences.shape[1:]}")

    adam = AdamState.for_params(params)
    loss_cfg = cfg.loss_config
    step_times = []
    for _ in range(args.repeats + 1):  # first iteration is warm-up
        t0 = time.monotonic()
        with GradTape() as tape:
            emb, _ = encode_batch(Tensor(vb.sequences), model)
            loss = contrastive_loss(vb.with_views(emb), loss_cfg)
        leaf = backward(tape, loss)
        grads = {name: leaf[t] for name, t in params.items() if t in leaf}
        grads, _ = clip_global_norm(grads, cfg.clip_norm)
        adam_step(params, grads, adam, cfg.pretrain_lr)
        step_times.append(time.monotonic() - t0)
    step_times = step_times[1:]
    print(f"pretrain step: {statistics.mean(step_times):.3f}s mean "
          f"(+/- {statistics.pstdev(step_times):.3f}s, loss {float(loss.data):.4f})")

    windows, _ = flatten_windows(videos)
    stats = benchmark_inference(lambda: predict_logits(model, windows),
                                num_sequences=len(windows), repeats=args.repeats)
    print(f"inference: {stats['mean_sequence_seconds'] * 1e3:.1f} ms/sequence "
          f"over {len(windows)} sequences "
          f"({stats['mean_pass_seconds']:.2f}s per pass)")


if __name__ == "__main__":
    main()

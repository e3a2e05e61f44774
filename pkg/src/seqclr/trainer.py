"""Two-phase training: contrastive pretraining, then supervised fine-tuning.

Both phases share Adam with bias correction, global-norm gradient clipping,
and seeded shuffling; fine-tuning adds a stratified validation split with
patience-based early stopping and best-weights restore. Training emits
line-delimited metric records via an optional callback.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from . import tensor as tz
from .augment import AugmentConfig, prepare_sequence
from .dataio import FrameSequence
from .layers import Model, encode_batch, classifier_head
from .losses import LossConfig, contrastive_loss, normalize_loss_kind
from .pairs import PAIR_KINDS, make_contextual, make_instance_pairs, make_multiview
from .tensor import GradTape, Rng, Tensor, backward, clip_global_norm


class TrainingError(RuntimeError):
    """Raised when training hits a non-finite loss or an empty data split."""


@dataclass(frozen=True)
class TrainConfig:
    method: str = "contextual"
    loss: str = "nt_logistic"
    attention: str = "bahdanau"
    temperature: float = 0.1
    margin: float = 1.0
    pretrain_epochs: int = 20
    pretrain_batch: int = 32
    finetune_batch: int = 4
    pretrain_lr: float = 1e-3
    finetune_lr: float = 1e-5
    finetune_max_epochs: int = 20
    patience: int = 10
    clip_norm: float = 1.0
    val_fraction: float = 0.1
    n_views: int = 4
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "loss", normalize_loss_kind(self.loss))
        if self.method not in PAIR_KINDS:
            raise ValueError(f"unknown pair method: {self.method!r}")
        for name in ("temperature", "margin", "pretrain_lr", "finetune_lr", "clip_norm"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")

    @property
    def loss_config(self) -> LossConfig:
        return LossConfig(kind=self.loss, temperature=self.temperature, margin=self.margin)


@dataclass
class VideoItem:
    """One source video: its label and its prepared 20-frame windows."""

    video_id: str
    label_index: int
    windows: list[FrameSequence]


LogFn = Callable[[dict], None]


# ---------------------------------------------------------------------------
# Losses and optimizer


def cross_entropy(logits: Tensor, labels: np.ndarray) -> Tensor:
    """Mean negative log softmax probability of the true class, stable form."""
    logits = logits if isinstance(logits, Tensor) else Tensor(logits)
    labels = np.asarray(labels)
    B, K = logits.shape
    if labels.shape != (B,):
        raise ValueError(f"labels shape {labels.shape} does not match batch {B}")
    if labels.min() < 0 or labels.max() >= K:
        raise ValueError(f"labels must lie in 0..{K - 1}")
    m = logits.data.max(axis=1, keepdims=True)  # detached shift
    shifted = logits - m
    logz = tz.log(tz.exp(shifted).sum(axis=1, keepdims=True))
    onehot = np.zeros((B, K), dtype=logits.dtype)
    onehot[np.arange(B), labels] = 1.0
    picked = (shifted * onehot).sum(axis=1, keepdims=True)
    return (logz - picked).mean()


@dataclass
class AdamState:
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @staticmethod
    def for_params(params: dict[str, Tensor]) -> "AdamState":
        return AdamState(m={k: np.zeros_like(t.data) for k, t in params.items()},
                         v={k: np.zeros_like(t.data) for k, t in params.items()})


def adam_step(params: dict[str, Tensor], grads: dict[str, np.ndarray],
              state: AdamState, lr: float) -> None:
    """Bias-corrected Adam update in place; params without grads are untouched."""
    state.step += 1
    t = state.step
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1**t
    c2 = 1.0 - b2**t
    for name, g in grads.items():
        p = params[name]
        if g.shape != p.shape:
            raise ValueError(f"gradient shape {g.shape} != parameter shape {p.shape} for {name}")
        m = state.m[name]
        v = state.v[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        p.data -= lr * (m / c1) / (np.sqrt(v / c2) + state.eps)


# ---------------------------------------------------------------------------
# Early stopping


@dataclass
class EarlyStopState:
    patience: int
    best: float = float("inf")
    epochs_since_improvement: int = 0
    best_epoch: int = -1
    epoch: int = 0


def early_stop_update(state: EarlyStopState, val_loss: float) -> bool:
    """Record one validation result; returns True when training should stop."""
    if not np.isfinite(val_loss):
        raise TrainingError(f"non-finite validation loss: {val_loss}")
    state.epoch += 1
    if val_loss < state.best - 1e-6:
        state.best = float(val_loss)
        state.best_epoch = state.epoch
        state.epochs_since_improvement = 0
    else:
        state.epochs_since_improvement += 1
    return state.epochs_since_improvement >= state.patience


# ---------------------------------------------------------------------------
# Parameter snapshots


def _snapshot(params: dict[str, Tensor]) -> dict[str, np.ndarray]:
    return {k: t.data.copy() for k, t in params.items()}


def _restore(params: dict[str, Tensor], snap: dict[str, np.ndarray]) -> None:
    for k, t in params.items():
        t.data = snap[k].copy()


def _grads_by_name(params: dict[str, Tensor], leaf_grads: dict[Tensor, np.ndarray]):
    out = {}
    for name, t in params.items():
        g = leaf_grads.get(t)
        if g is not None:
            out[name] = g
    return out


# ---------------------------------------------------------------------------
# Pretraining


def _build_view_batch(method: str, videos: list[VideoItem] | list[FrameSequence],
                      cfg: TrainConfig, aug: AugmentConfig, rng: Rng):
    if method == "contextual":
        return make_contextual([v.windows for v in videos], aug, rng)
    windows = videos
    if method == "instance":
        return make_instance_pairs(windows, aug, rng)
    return make_multiview(windows, cfg.n_views, aug, rng)


def _contextual_batches(videos: list[VideoItem], batch_anchors: int, rng: Rng):
    """Whole videos per batch so adjacent windows stay co-batched."""
    order = rng.permutation(len(videos))
    batch: list[VideoItem] = []
    count = 0
    for vi in order:
        v = videos[int(vi)]
        batch.append(v)
        count += len(v.windows)
        if count >= batch_anchors:
            yield batch
            batch, count = [], 0
    if batch:
        yield batch


def _window_batches(windows: list[FrameSequence], batch_size: int, rng: Rng):
    order = rng.permutation(len(windows))
    for start in range(0, len(order), batch_size):
        chunk = [windows[int(i)] for i in order[start : start + batch_size]]
        yield chunk


def pretrain(model: Model, videos: list[VideoItem], cfg: TrainConfig,
             aug: AugmentConfig | None = None, log: LogFn | None = None) -> list[dict]:
    """Contrastive pretraining; labels are never read. Returns epoch history."""
    if not videos:
        raise TrainingError("pretrain: empty dataset")
    aug = aug or AugmentConfig()
    params = model.parameters()
    adam = AdamState.for_params(params)
    rng = Rng(cfg.seed).child("pretrain")
    loss_cfg = cfg.loss_config
    all_windows = [w for v in videos for w in v.windows]
    history: list[dict] = []
    for epoch in range(1, cfg.pretrain_epochs + 1):
        t0 = time.monotonic()
        erng = rng.child("epoch", epoch)
        if cfg.method == "contextual":
            batches = _contextual_batches(videos, cfg.pretrain_batch, erng.child("shuffle"))
        else:
            batches = _window_batches(all_windows, cfg.pretrain_batch, erng.child("shuffle"))
        losses = []
        for bi, batch in enumerate(batches):
            vb = _build_view_batch(cfg.method, batch, cfg, aug, erng.child("pairs", bi))
            with GradTape() as tape:
                emb, _ = encode_batch(Tensor(vb.sequences), model)
                loss = contrastive_loss(vb.with_views(emb), loss_cfg)
            value = float(loss.data)
            if not np.isfinite(value):
                raise TrainingError(
                    f"non-finite pretrain loss {value} at epoch {epoch} step {bi} "
                    f"(method={cfg.method}, loss={cfg.loss})")
            leaf = backward(tape, loss)
            grads = _grads_by_name(params, leaf)
            grads, _ = clip_global_norm(grads, cfg.clip_norm)
            adam_step(params, grads, adam, cfg.pretrain_lr)
            losses.append(value)
        rec = {"phase": "pretrain", "epoch": epoch, "loss": float(np.mean(losses)),
               "val_loss": None, "wall_time": time.monotonic() - t0}
        history.append(rec)
        if log:
            log(rec)
    return history


# ---------------------------------------------------------------------------
# Fine-tuning


def stratified_validation_split(labels: np.ndarray, fraction: float,
                                rng: Rng) -> tuple[np.ndarray, np.ndarray]:
    """Index split with floor(fraction*n) per class moved to validation."""
    labels = np.asarray(labels)
    train_idx, val_idx = [], []
    for c in sorted(set(labels.tolist())):
        idx = np.flatnonzero(labels == c)
        order = rng.child("class", int(c)).permutation(len(idx))
        n_val = int(np.floor(fraction * len(idx)))
        val_idx.extend(idx[order[:n_val]].tolist())
        train_idx.extend(idx[order[n_val:]].tolist())
    return np.array(sorted(train_idx)), np.array(sorted(val_idx))


def predict_logits(model: Model, sequences: list[FrameSequence] | np.ndarray,
                   batch_size: int = 32) -> tuple[np.ndarray, np.ndarray]:
    """Inference pass: (logits [N,K], attention [N,T]); no tape, no grads."""
    if isinstance(sequences, np.ndarray):
        frames = sequences
    else:
        frames = np.stack([s.frames for s in sequences])
    logits_out, attn_out = [], []
    for start in range(0, frames.shape[0], batch_size):
        chunk = frames[start : start + batch_size]
        emb, attn = encode_batch(Tensor(chunk), model)
        logits = classifier_head(emb, model.head)
        logits_out.append(logits.data.copy())
        attn_out.append(attn.data.copy())
    return np.concatenate(logits_out), np.concatenate(attn_out)


def _mean_val_loss(model: Model, windows: list[FrameSequence], labels: np.ndarray) -> float:
    logits, _ = predict_logits(model, windows)
    return float(cross_entropy(Tensor(logits.astype(np.float64)), labels).data)


def finetune(model: Model, windows: list[FrameSequence], labels: np.ndarray,
             cfg: TrainConfig, log: LogFn | None = None) -> tuple[Model, list[dict]]:
    """Supervised phase: cross-entropy over batches of finetune_batch, early
    stopping on a stratified validation split, best weights restored."""
    labels = np.asarray(labels)
    if len(windows) == 0:
        raise TrainingError("finetune: empty training set")
    if len(windows) != len(labels):
        raise TrainingError("finetune: windows and labels length mismatch")
    rng = Rng(cfg.seed).child("finetune")
    train_idx, val_idx = stratified_validation_split(labels, cfg.val_fraction,
                                                     rng.child("val_split"))
    if len(train_idx) == 0 or len(val_idx) == 0:
        raise TrainingError("finetune: empty train or validation split "
                            f"({len(train_idx)} train / {len(val_idx)} val)")
    train_windows = [windows[i] for i in train_idx]
    train_labels = labels[train_idx]
    val_windows = [windows[i] for i in val_idx]
    val_labels = labels[val_idx]
    params = model.parameters()
    adam = AdamState.for_params(params)
    stopper = EarlyStopState(patience=cfg.patience)
    best = _snapshot(params)
    history: list[dict] = []
    for epoch in range(1, cfg.finetune_max_epochs + 1):
        t0 = time.monotonic()
        order = rng.child("epoch", epoch).permutation(len(train_windows))
        losses = []
        for start in range(0, len(order), cfg.finetune_batch):
            idx = order[start : start + cfg.finetune_batch]
            frames = np.stack([train_windows[int(i)].frames for i in idx])
            batch_labels = train_labels[idx]
            with GradTape() as tape:
                emb, _ = encode_batch(Tensor(frames), model)
                logits = classifier_head(emb, model.head)
                loss = cross_entropy(logits, batch_labels)
            value = float(loss.data)
            if not np.isfinite(value):
                raise TrainingError(f"non-finite finetune loss at epoch {epoch}")
            leaf = backward(tape, loss)
            grads = _grads_by_name(params, leaf)
            grads, _ = clip_global_norm(grads, cfg.clip_norm)
            adam_step(params, grads, adam, cfg.finetune_lr)
            losses.append(value)
        val_loss = _mean_val_loss(model, val_windows, val_labels)
        improved = val_loss < stopper.best - 1e-6
        stop = early_stop_update(stopper, val_loss)
        if improved:
            best = _snapshot(params)
        rec = {"phase": "finetune", "epoch": epoch, "loss": float(np.mean(losses)),
               "val_loss": val_loss, "wall_time": time.monotonic() - t0}
        history.append(rec)
        if log:
            log(rec)
        if stop:
            break
    _restore(params, best)
    return model, history


# ---------------------------------------------------------------------------
# Dataset assembly


def videos_from_manifest(manifest, aug: AugmentConfig | None = None,
                         window_len: int = 20) -> list[VideoItem]:
    """Load every manifest entry, window it, and normalize window shapes."""
    from .dataio import read_frame_sequence, sample_windows

    aug = aug or AugmentConfig()
    items = []
    for entry in manifest.entries:
        seq = read_frame_sequence(entry, root=manifest.root)
        windows = [prepare_sequence(w, aug) for w in sample_windows(seq, window_len)]
        items.append(VideoItem(video_id=entry.video_id, label_index=entry.label_index,
                               windows=windows))
    return items


def flatten_windows(videos: list[VideoItem]) -> tuple[list[FrameSequence], np.ndarray]:
    windows, labels = [], []
    for v in videos:
        for w in v.windows:
            windows.append(w)
            labels.append(v.label_index)
    return windows, np.array(labels)

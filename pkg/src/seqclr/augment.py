"""Stochastic view augmentation: resize, flip, brightness, contrast, rotation.

A sequence gets ONE parameter draw applied identically to every frame, so
augmentation never breaks temporal coherence. Temporal length is normalized
to cfg.sequence_length by uniform-stride sampling (short inputs repeat the
last frame).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .dataio import DataError, FrameSequence
from .tensor import Rng


@dataclass(frozen=True)
class AugmentConfig:
    resize_to: tuple[int, int] = (64, 64)
    flip_prob: float = 0.5
    brightness_max_delta: float = 0.2
    contrast_range: tuple[float, float] = (0.8, 1.2)
    rotation_degrees: int = 90
    sequence_length: int = 20

    def __post_init__(self):
        if not 0.0 <= self.flip_prob <= 1.0:
            raise ValueError("flip_prob must lie in [0,1]")
        if self.contrast_range[0] <= 0 or self.contrast_range[1] < self.contrast_range[0]:
            raise ValueError("contrast_range must be positive and ordered")
        if self.rotation_degrees % 90 != 0:
            raise ValueError("rotation_degrees must be a multiple of 90 (grid-exact turns)")
        if self.sequence_length < 2:
            raise ValueError("sequence_length must be at least 2")

    def to_dict(self) -> dict:
        return {"resize_to": list(self.resize_to), "flip_prob": self.flip_prob,
                "brightness_max_delta": self.brightness_max_delta,
                "contrast_range": list(self.contrast_range),
                "rotation_degrees": self.rotation_degrees,
                "sequence_length": self.sequence_length}

    @staticmethod
    def from_dict(d: dict) -> "AugmentConfig":
        d = dict(d)
        d["resize_to"] = tuple(d["resize_to"])
        d["contrast_range"] = tuple(d["contrast_range"])
        return AugmentConfig(**d)


@dataclass(frozen=True)
class AugmentDraw:
    flip: bool = False
    brightness_delta: float = 0.0
    contrast_factor: float = 1.0
    quarter_turns: int = 0


IDENTITY_DRAW = AugmentDraw()


def draw_augmentation(cfg: AugmentConfig, rng: Rng) -> AugmentDraw:
    """One parameter draw; order of draws is part of the determinism contract."""
    g = rng.gen
    flip = bool(g.uniform() < cfg.flip_prob)
    delta = float(g.uniform(-cfg.brightness_max_delta, cfg.brightness_max_delta))
    factor = float(g.uniform(cfg.contrast_range[0], cfg.contrast_range[1]))
    turns = int(g.integers(0, 4))
    return AugmentDraw(flip=flip, brightness_delta=delta, contrast_factor=factor,
                       quarter_turns=turns)


def resize_bilinear(frames: np.ndarray, out_hw: tuple[int, int]) -> np.ndarray:
    """Bilinear resize of [...,H,W,C] stacks with half-pixel centers."""
    Ho, Wo = out_hw
    H, W = frames.shape[-3], frames.shape[-2]
    if (H, W) == (Ho, Wo):
        return np.ascontiguousarray(frames)
    ys = (np.arange(Ho, dtype=np.float64) + 0.5) * (H / Ho) - 0.5
    xs = (np.arange(Wo, dtype=np.float64) + 0.5) * (W / Wo) - 0.5
    ys = np.clip(ys, 0.0, H - 1)
    xs = np.clip(xs, 0.0, W - 1)
    y0 = np.floor(ys).astype(np.intp)
    x0 = np.floor(xs).astype(np.intp)
    y1 = np.minimum(y0 + 1, H - 1)
    x1 = np.minimum(x0 + 1, W - 1)
    wy = (ys - y0).astype(frames.dtype)
    wx = (xs - x0).astype(frames.dtype)
    rows0 = frames[..., y0, :, :]
    rows1 = frames[..., y1, :, :]
    wy = wy.reshape(-1, 1, 1)
    top = rows0[..., :, x0, :] * (1 - wx.reshape(-1, 1)) + rows0[..., :, x1, :] * wx.reshape(-1, 1)
    bot = rows1[..., :, x0, :] * (1 - wx.reshape(-1, 1)) + rows1[..., :, x1, :] * wx.reshape(-1, 1)
    return (top * (1 - wy) + bot * wy).astype(frames.dtype)


def apply_augmentation(frames: np.ndarray, draw: AugmentDraw, cfg: AugmentConfig) -> np.ndarray:
    """Apply one draw to a [T,H,W,C] stack: resize, flip, brightness, contrast,
    rotation, clamp, in that order."""
    x = resize_bilinear(frames, cfg.resize_to)
    if draw.flip:
        x = x[:, :, ::-1, :]
    if draw.brightness_delta != 0.0:
        x = x + np.asarray(draw.brightness_delta, dtype=x.dtype)
    if draw.contrast_factor != 1.0:
        m = x.mean(axis=(1, 2, 3), keepdims=True)
        x = m + np.asarray(draw.contrast_factor, dtype=x.dtype) * (x - m)
    if draw.quarter_turns % 4 != 0:
        x = np.rot90(x, k=draw.quarter_turns % 4, axes=(1, 2))
    return np.clip(x, 0.0, 1.0).astype(np.float32, copy=False)


def augment_frame(frame: np.ndarray, cfg: AugmentConfig, rng: Rng) -> np.ndarray:
    """Augment a single [H,W,C] frame with a fresh draw from ``rng``."""
    frame = np.asarray(frame)
    if frame.ndim != 3 or frame.size == 0:
        raise DataError(f"augment_frame expects a nonempty [H,W,C] frame, got {frame.shape}")
    if frame.min() < -1e-6 or frame.max() > 1.0 + 1e-6:
        raise DataError("augment_frame: pixel values must lie in [0,1]")
    draw = draw_augmentation(cfg, rng)
    return apply_augmentation(frame[None], draw, cfg)[0]


def temporal_indices(t_in: int, t_out: int) -> np.ndarray:
    """Uniform-stride frame selection; short inputs repeat the last frame."""
    if t_in < 1:
        raise DataError("cannot sample an empty sequence")
    if t_in >= t_out:
        return (np.arange(t_out) * t_in) // t_out
    return np.concatenate([np.arange(t_in), np.full(t_out - t_in, t_in - 1)])


def _as_frames(seq) -> tuple[np.ndarray, str, int]:
    if isinstance(seq, FrameSequence):
        return seq.frames, seq.source_id, seq.window_index
    arr = np.asarray(seq)
    return arr, "", 0


def prepare_sequence(seq, cfg: AugmentConfig) -> FrameSequence:
    """Deterministic shape normalization only: temporal sampling + resize."""
    frames, source_id, window_index = _as_frames(seq)
    if frames.ndim != 4 or frames.shape[0] < 1:
        raise DataError(f"prepare_sequence expects [T,H,W,C], got {frames.shape}")
    idx = temporal_indices(frames.shape[0], cfg.sequence_length)
    out = resize_bilinear(frames[idx], cfg.resize_to).astype(np.float32, copy=False)
    out = np.clip(out, 0.0, 1.0)
    return FrameSequence(frames=out, source_id=source_id, window_index=window_index)


def augment_sequence(seq, cfg: AugmentConfig, rng: Rng) -> FrameSequence:
    """Temporal sampling plus one shared augmentation draw over all frames."""
    frames, source_id, window_index = _as_frames(seq)
    if frames.ndim != 4 or frames.shape[0] < 1:
        raise DataError(f"augment_sequence expects [T,H,W,C], got {frames.shape}")
    idx = temporal_indices(frames.shape[0], cfg.sequence_length)
    draw = draw_augmentation(cfg, rng)
    out = apply_augmentation(frames[idx], draw, cfg)
    return FrameSequence(frames=out, source_id=source_id, window_index=window_index)

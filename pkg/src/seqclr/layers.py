"""Hybrid sequence encoder: conv+GAP per frame, LSTM over time, attention pooling.

Public single-input ops mirror the math (inputs [C,H,W] or [T,...]); the
batched paths used by training carry NHWC frame batches for kernel speed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np

from . import tensor as tz
from .tensor import Rng, Tensor

ATTENTION_KINDS = ("self", "co", "bahdanau")


@dataclass(frozen=True)
class ModelConfig:
    """Architecture description; reference values target a sub-0.7M footprint."""

    attention: str = "bahdanau"
    num_classes: int = 4
    in_channels: int = 1
    conv_channels: tuple[int, ...] = (8, 16, 32)
    kernel_size: int = 3
    lstm_hidden: int = 128
    attn_dim: int = 64
    coattn_dim: int = 128
    sequence_length: int = 20
    dtype: str = "float32"

    def __post_init__(self):
        if self.attention not in ATTENTION_KINDS:
            raise ValueError(f"unknown attention kind: {self.attention!r}")
        if self.kernel_size % 2 == 0:
            raise ValueError("kernel_size must be odd for same-padding")
        if self.sequence_length < 2:
            raise ValueError("sequence_length must be at least 2")

    @property
    def embed_dim(self) -> int:
        if self.attention == "co":
            return 2 * self.coattn_dim
        return self.lstm_hidden

    def to_dict(self) -> dict:
        return {
            "attention": self.attention,
            "num_classes": self.num_classes,
            "in_channels": self.in_channels,
            "conv_channels": list(self.conv_channels),
            "kernel_size": self.kernel_size,
            "lstm_hidden": self.lstm_hidden,
            "attn_dim": self.attn_dim,
            "coattn_dim": self.coattn_dim,
            "sequence_length": self.sequence_length,
            "dtype": self.dtype,
        }

    @staticmethod
    def from_dict(d: dict) -> "ModelConfig":
        d = dict(d)
        d["conv_channels"] = tuple(d["conv_channels"])
        return ModelConfig(**d)


@dataclass
class ConvLayer:
    W: Tensor  # [out_ch, in_ch, k, k]
    b: Tensor  # [out_ch]


@dataclass
class LstmCell:
    W_i: Tensor
    W_f: Tensor
    W_c: Tensor
    W_o: Tensor
    U_i: Tensor
    U_f: Tensor
    U_c: Tensor
    U_o: Tensor
    b_i: Tensor
    b_f: Tensor
    b_c: Tensor
    b_o: Tensor

    @property
    def hidden_size(self) -> int:
        return self.W_i.shape[0]

    @property
    def input_size(self) -> int:
        return self.W_i.shape[1]


@dataclass
class SelfAttnParams:
    W: Tensor  # [1, hidden]
    b: Tensor  # [1]


@dataclass
class CoAttnParams:
    W_Q: Tensor  # [d_attn, hidden]
    W_K: Tensor
    W_V: Tensor


@dataclass
class BahdanauParams:
    W_1: Tensor  # [a, hidden]
    W_2: Tensor  # [a, hidden]
    v: Tensor  # [a]


@dataclass
class HeadParams:
    W_out: Tensor  # [num_classes, embed_dim]
    b_out: Tensor  # [num_classes]


AttnParams = Union[SelfAttnParams, CoAttnParams, BahdanauParams]


@dataclass
class Model:
    config: ModelConfig
    conv: list[ConvLayer]
    lstm: LstmCell
    attn: AttnParams
    head: HeadParams

    def parameters(self) -> dict[str, Tensor]:
        params: dict[str, Tensor] = {}
        for i, layer in enumerate(self.conv):
            params[f"conv{i}.W"] = layer.W
            params[f"conv{i}.b"] = layer.b
        for name in ("W_i", "W_f", "W_c", "W_o", "U_i", "U_f", "U_c", "U_o",
                     "b_i", "b_f", "b_c", "b_o"):
            params[f"lstm.{name}"] = getattr(self.lstm, name)
        if isinstance(self.attn, SelfAttnParams):
            params["attn.W"] = self.attn.W
            params["attn.b"] = self.attn.b
        elif isinstance(self.attn, CoAttnParams):
            params["attn.W_Q"] = self.attn.W_Q
            params["attn.W_K"] = self.attn.W_K
            params["attn.W_V"] = self.attn.W_V
        else:
            params["attn.W_1"] = self.attn.W_1
            params["attn.W_2"] = self.attn.W_2
            params["attn.v"] = self.attn.v
        params["head.W_out"] = self.head.W_out
        params["head.b_out"] = self.head.b_out
        return params


def count_parameters(model: Model) -> int:
    return sum(t.size for t in model.parameters().values())


def build_model(cfg: ModelConfig, rng: Rng, head_init: str = "zeros") -> Model:
    """Initialize parameters: Glorot-uniform weights, zero biases, forget bias 1.

    The classification head defaults to zeros so fine-tuning at a very small
    learning rate starts from uniform class probabilities instead of having
    to wash out a random decision boundary.
    """
    dt = np.dtype(cfg.dtype)

    def leaf(arr: np.ndarray) -> Tensor:
        return Tensor(np.ascontiguousarray(arr, dtype=dt), requires_grad=True)

    conv = []
    in_ch = cfg.in_channels
    k = cfg.kernel_size
    for i, out_ch in enumerate(cfg.conv_channels):
        W = tz.glorot_uniform((out_ch, in_ch, k, k), rng.child("conv.W", i), dtype=dt)
        conv.append(ConvLayer(W=Tensor(W, requires_grad=True), b=leaf(np.zeros(out_ch))))
        in_ch = out_ch

    feat = cfg.conv_channels[-1]
    H = cfg.lstm_hidden
    gates = {}
    for gi, g in enumerate(("i", "f", "c", "o")):
        gates[f"W_{g}"] = leaf(tz.glorot_uniform((H, feat), rng.child("lstm.W", gi), dtype=dt))
        gates[f"U_{g}"] = leaf(tz.glorot_uniform((H, H), rng.child("lstm.U", gi), dtype=dt))
        bias = np.ones(H) if g == "f" else np.zeros(H)
        gates[f"b_{g}"] = leaf(bias)
    lstm = LstmCell(**gates)

    attn: AttnParams
    if cfg.attention == "self":
        attn = SelfAttnParams(
            W=leaf(tz.glorot_uniform((1, H), rng.child("attn", 0), dtype=dt)),
            b=leaf(np.zeros(1)),
        )
    elif cfg.attention == "co":
        d = cfg.coattn_dim
        attn = CoAttnParams(
            W_Q=leaf(tz.glorot_uniform((d, H), rng.child("attn", 0), dtype=dt)),
            W_K=leaf(tz.glorot_uniform((d, H), rng.child("attn", 1), dtype=dt)),
            W_V=leaf(tz.glorot_uniform((d, H), rng.child("attn", 2), dtype=dt)),
        )
    else:
        a = cfg.attn_dim
        attn = BahdanauParams(
            W_1=leaf(tz.glorot_uniform((a, H), rng.child("attn", 0), dtype=dt)),
            W_2=leaf(tz.glorot_uniform((a, H), rng.child("attn", 1), dtype=dt)),
            v=leaf(tz.glorot_uniform((a, 1), rng.child("attn", 2), dtype=dt,
                                     fan_in=a, fan_out=1).reshape(a)),
        )

    E = cfg.embed_dim
    if head_init == "zeros":
        W_out = np.zeros((cfg.num_classes, E))
    elif head_init == "glorot":
        W_out = tz.glorot_uniform((cfg.num_classes, E), rng.child("head", 0), dtype=dt)
    else:
        raise ValueError(f"unknown head_init: {head_init!r}")
    head = HeadParams(W_out=leaf(W_out), b_out=leaf(np.zeros(cfg.num_classes)))
    return Model(config=cfg, conv=conv, lstm=lstm, attn=attn, head=head)


# ---------------------------------------------------------------------------
# Single-input ops in math layout


def conv2d_forward(x: Tensor, layer: ConvLayer) -> Tensor:
    """ReLU(same-padded conv) on a single [C,H,W] map."""
    x = x if isinstance(x, Tensor) else Tensor(x)
    if x.ndim != 3:
        raise ValueError(f"conv2d_forward expects [C,H,W], got {x.shape}")
    nhwc = tz.reshape(tz.transpose(x, (1, 2, 0)), (1, *x.shape[1:], x.shape[0]))
    y = tz.conv2d(nhwc, layer.W, layer.b, fuse_relu=True)
    return tz.transpose(tz.reshape(y, y.shape[1:]), (2, 0, 1))


def maxpool2d(x: Tensor, window: int = 2, stride: int = 2) -> Tensor:
    """Max pooling on a single [C,H,W] map."""
    x = x if isinstance(x, Tensor) else Tensor(x)
    nhwc = tz.reshape(tz.transpose(x, (1, 2, 0)), (1, *x.shape[1:], x.shape[0]))
    y = tz.maxpool2d(nhwc, window=window, stride=stride)
    return tz.transpose(tz.reshape(y, y.shape[1:]), (2, 0, 1))


def global_avg_pool(F: Tensor) -> Tensor:
    """Per-channel spatial mean: [C,H,W] -> [C]."""
    F = F if isinstance(F, Tensor) else Tensor(F)
    return F.mean(axis=(1, 2))


def lstm_step(x_t: Tensor, state: tuple[Tensor, Tensor], cell: LstmCell) -> tuple[Tensor, Tensor]:
    """One LSTM update. ``x_t`` is [input] or [B,input]; state matches."""
    x_t = x_t if isinstance(x_t, Tensor) else Tensor(x_t)
    single = x_t.ndim == 1
    h, c = state
    if single:
        x_t = x_t.reshape(1, -1)
        h, c = h.reshape(1, -1), c.reshape(1, -1)
    if x_t.shape[-1] != cell.input_size:
        raise ValueError(f"lstm_step input size {x_t.shape[-1]} != {cell.input_size}")
    i = tz.sigmoid(x_t @ tz.transpose(cell.W_i) + h @ tz.transpose(cell.U_i) + cell.b_i)
    f = tz.sigmoid(x_t @ tz.transpose(cell.W_f) + h @ tz.transpose(cell.U_f) + cell.b_f)
    g = tz.tanh(x_t @ tz.transpose(cell.W_c) + h @ tz.transpose(cell.U_c) + cell.b_c)
    o = tz.sigmoid(x_t @ tz.transpose(cell.W_o) + h @ tz.transpose(cell.U_o) + cell.b_o)
    c_new = f * c + i * g
    h_new = o * tz.tanh(c_new)
    if single:
        return h_new.reshape(-1), c_new.reshape(-1)
    return h_new, c_new


def lstm_sequence(xs: Tensor, cell: LstmCell) -> tuple[Tensor, tuple[Tensor, Tensor]]:
    """Run the cell over [T,input] or [B,T,input] from a zero initial state.

    Input projections for the whole sequence are batched into one GEMM per
    gate; the recurrence itself is stepwise.
    """
    xs = xs if isinstance(xs, Tensor) else Tensor(xs)
    single = xs.ndim == 2
    if single:
        xs = xs.reshape(1, *xs.shape)
    B, T, F = xs.shape
    if T < 1:
        raise ValueError("lstm_sequence requires T >= 1")
    H = cell.hidden_size
    xs2 = xs.reshape(B * T, F)
    pre = {}
    for g in ("i", "f", "c", "o"):
        W = getattr(cell, f"W_{g}")
        b = getattr(cell, f"b_{g}")
        pre[g] = (xs2 @ tz.transpose(W) + b).reshape(B, T, H)
    UiT, UfT, UcT, UoT = (tz.transpose(getattr(cell, f"U_{g}")) for g in ("i", "f", "c", "o"))
    zeros = np.zeros((B, H), dtype=xs.dtype)
    h, c = Tensor(zeros), Tensor(zeros.copy())
    hs = []
    for t in range(T):
        i = tz.sigmoid(pre["i"][:, t] + h @ UiT)
        f = tz.sigmoid(pre["f"][:, t] + h @ UfT)
        g = tz.tanh(pre["c"][:, t] + h @ UcT)
        o = tz.sigmoid(pre["o"][:, t] + h @ UoT)
        c = f * c + i * g
        h = o * tz.tanh(c)
        hs.append(h)
    out = tz.stack(hs, axis=1)
    if single:
        return out.reshape(T, H), (h.reshape(H), c.reshape(H))
    return out, (h, c)


# ---------------------------------------------------------------------------
# Attention (batched [B,T,H]; single [T,H] lifted)


def _lift(h: Tensor) -> tuple[Tensor, bool]:
    h = h if isinstance(h, Tensor) else Tensor(h)
    if h.ndim == 2:
        return h.reshape(1, *h.shape), True
    return h, False


def self_attention(h: Tensor, p: SelfAttnParams) -> tuple[Tensor, Tensor]:
    """Scalar tanh scores per step, softmax over time, weighted-sum context."""
    h, single = _lift(h)
    B, T, H = h.shape
    u = tz.tanh(h.reshape(B * T, H) @ tz.transpose(p.W) + p.b).reshape(B, T, 1)
    alpha = tz.softmax(u, axis=1)
    ctx = (alpha * h).sum(axis=1)
    weights = alpha.reshape(B, T)
    if single:
        return ctx.reshape(H), weights.reshape(T)
    return ctx, weights


def bahdanau_attention(h: Tensor, p: BahdanauParams) -> tuple[Tensor, Tensor]:
    """Additive attention with the final hidden state as the query."""
    h, single = _lift(h)
    B, T, H = h.shape
    a = p.W_1.shape[0]
    keys = (h.reshape(B * T, H) @ tz.transpose(p.W_1)).reshape(B, T, a)
    query = (h[:, T - 1] @ tz.transpose(p.W_2)).reshape(B, 1, a)
    e = tz.tanh(keys + query) @ p.v.reshape(a, 1)
    alpha = tz.softmax(e, axis=1)
    ctx = (alpha * h).sum(axis=1)
    weights = alpha.reshape(B, T)
    if single:
        return ctx.reshape(H), weights.reshape(T)
    return ctx, weights


def co_attention(v1: Tensor, v2: Tensor, p: CoAttnParams) -> tuple[Tensor, Tensor, Tensor]:
    """Cross-view attention; returns (attended1, attended2, embedding)."""
    att1, att2, emb, _, _ = co_attention_full(v1, v2, p)
    return att1, att2, emb


def co_attention_full(v1: Tensor, v2: Tensor, p: CoAttnParams):
    """co_attention plus both row-stochastic weight matrices."""
    v1, single = _lift(v1)
    v2, _ = _lift(v2)
    if v1.shape[1] != v2.shape[1]:
        raise ValueError(f"co_attention length mismatch: {v1.shape[1]} vs {v2.shape[1]}")
    WQT, WKT, WVT = tz.transpose(p.W_Q), tz.transpose(p.W_K), tz.transpose(p.W_V)
    Q1, K1, V1 = v1 @ WQT, v1 @ WKT, v1 @ WVT
    Q2, K2, V2 = v2 @ WQT, v2 @ WKT, v2 @ WVT
    scores1 = Q1 @ tz.transpose(K2, (0, 2, 1))
    scores2 = Q2 @ tz.transpose(K1, (0, 2, 1))
    alpha1 = tz.softmax(scores1, axis=2)
    alpha2 = tz.softmax(scores2, axis=2)
    att1 = alpha1 @ V2
    att2 = alpha2 @ V1
    emb = tz.concat([att1.mean(axis=1), att2.mean(axis=1)], axis=-1)
    if single:
        d = p.W_Q.shape[0]
        return (att1.reshape(att1.shape[1], d), att2.reshape(att2.shape[1], d),
                emb.reshape(2 * d), alpha1.reshape(alpha1.shape[1:]), alpha2.reshape(alpha2.shape[1:]))
    return att1, att2, emb, alpha1, alpha2


# ---------------------------------------------------------------------------
# Full encoder


def frame_features(frames: Tensor, model: Model) -> Tensor:
    """Conv stack + GAP on an NHWC frame batch: [N,H,W,C] -> [N,feat]."""
    x = frames
    for i, layer in enumerate(model.conv):
        x = tz.conv2d(x, layer.W, layer.b, fuse_relu=True)
        if i < len(model.conv) - 1:
            x = tz.maxpool2d(x, window=2, stride=2)
    return x.mean(axis=(1, 2))


def encode_batch(frames: Tensor, model: Model) -> tuple[Tensor, Tensor]:
    """Encode [B,T,H,W,C] frame batches to (embeddings [B,E], attention [B,T]).

    Co-attention attends across the two temporal halves of the hidden
    sequence; its reported per-step weights are the mean received attention
    of each step within its half, renormalized to sum to 1 over all T steps.
    """
    frames = frames if isinstance(frames, Tensor) else Tensor(frames)
    if frames.ndim != 5:
        raise ValueError(f"encode_batch expects [B,T,H,W,C], got {frames.shape}")
    cfg = model.config
    B, T, H, W, C = frames.shape
    if C != cfg.in_channels:
        raise ValueError(f"encode_batch: {C} channels, model expects {cfg.in_channels}")
    dt = np.dtype(cfg.dtype)
    if frames.dtype != dt:
        frames = frames.astype(dt)
    feats = frame_features(frames.reshape(B * T, H, W, C), model)
    hs, _ = lstm_sequence(feats.reshape(B, T, feats.shape[-1]), model.lstm)
    if cfg.attention == "self":
        return self_attention(hs, model.attn)
    if cfg.attention == "bahdanau":
        return bahdanau_attention(hs, model.attn)
    if T < 2:
        raise ValueError("co-attention needs at least 2 time steps to split halves")
    T1 = T // 2
    _, _, emb, alpha1, alpha2 = co_attention_full(hs[:, :T1], hs[:, T1:], model.attn)
    received_first = alpha2.mean(axis=1)   # [B,T1]: attention each early step receives
    received_second = alpha1.mean(axis=1)  # [B,T-T1]
    weights = tz.concat([received_first, received_second], axis=-1) * 0.5
    return emb, weights


def encode_sequence(frames, model: Model) -> Tensor:
    """Encode one [T,H,W,C] sequence to its embedding [embed_dim]."""
    arr = frames.frames if hasattr(frames, "frames") else frames
    arr = arr if isinstance(arr, Tensor) else Tensor(arr)
    if arr.ndim != 4:
        raise ValueError(f"encode_sequence expects [T,H,W,C], got {arr.shape}")
    emb, _ = encode_batch(arr.reshape(1, *arr.shape), model)
    return emb.reshape(emb.shape[-1])


def classifier_head(embedding: Tensor, p: HeadParams) -> Tensor:
    """Affine map to class logits; accepts [E] or [B,E]."""
    embedding = embedding if isinstance(embedding, Tensor) else Tensor(embedding)
    single = embedding.ndim == 1
    e2 = embedding.reshape(1, -1) if single else embedding
    logits = e2 @ tz.transpose(p.W_out) + p.b_out
    return logits.reshape(-1) if single else logits


def forward_batch(model: Model, frames) -> tuple[Tensor, Tensor, Tensor]:
    """Full classifier pass: (logits [B,K], embeddings [B,E], attention [B,T])."""
    emb, attn = encode_batch(frames, model)
    return classifier_head(emb, model.head), emb, attn

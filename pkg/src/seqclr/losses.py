"""Contrastive objectives over cosine-similarity matrices.

All three losses consume a ViewBatch whose ``views`` hold raw embeddings;
row normalization happens inside similarity_matrix, which is what makes every
loss invariant to positive rescaling of any embedding row. Multi-positive
rows average their per-positive terms so the losses reduce to the classic
two-view forms when |P(i)| = 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensor as tz
from .pairs import ViewBatch
from .tensor import Tensor

LOSS_KINDS = ("nt_xent", "nt_logistic", "margin_triplet")

_ALIASES = {
    "ntxent": "nt_xent",
    "nt-xent": "nt_xent",
    "nt_xent": "nt_xent",
    "ntlogistic": "nt_logistic",
    "nt-logistic": "nt_logistic",
    "nt_logistic": "nt_logistic",
    "margintriplet": "margin_triplet",
    "margin-triplet": "margin_triplet",
    "margin_triplet": "margin_triplet",
    "triplet": "margin_triplet",
}


def normalize_loss_kind(name: str) -> str:
    key = name.strip().lower().replace(" ", "")
    if key in _ALIASES:
        return _ALIASES[key]
    raise ValueError(f"unknown loss kind: {name!r} (expected one of {LOSS_KINDS})")


@dataclass(frozen=True)
class LossConfig:
    kind: str = "nt_xent"
    temperature: float = 0.1
    margin: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", normalize_loss_kind(self.kind))
        if self.temperature <= 0:
            raise ValueError("temperature must be positive")
        if self.margin <= 0:
            raise ValueError("margin must be positive")


def similarity_matrix(R: Tensor) -> Tensor:
    """Row-normalize then take pairwise dot products: S = Z Z^T."""
    R = R if isinstance(R, Tensor) else Tensor(R)
    if R.ndim != 2:
        raise ValueError(f"similarity_matrix expects [M,d], got {R.shape}")
    Z = tz.l2_normalize(R, axis=-1)
    return Z @ tz.transpose(Z)


def _masks(positive_map: list[set[int]]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(normalized positive mask, negative mask, off-diagonal mask), float64."""
    M = len(positive_map)
    pos = np.zeros((M, M))
    for i, ps in enumerate(positive_map):
        if not ps:
            raise ValueError(f"row {i} has no positives")
        for p in ps:
            pos[i, p] = 1.0
    off = 1.0 - np.eye(M)
    neg = off - pos
    pos_norm = pos / pos.sum(axis=1, keepdims=True)
    return pos_norm, neg, off


def _sim_from_batch(batch: ViewBatch) -> Tensor:
    if batch.views is None:
        raise ValueError("ViewBatch has no embeddings; encode it before the loss")
    return similarity_matrix(batch.views)


def nt_xent_from_similarity(S: Tensor, positive_map: list[set[int]], tau: float) -> Tensor:
    pos_norm, _, off = _masks(positive_map)
    dt = S.dtype
    logits = S * (1.0 / np.asarray(tau, dtype=dt))
    # additive -inf mask removes self-similarity from the candidate set
    # before exp (a multiplicative mask after exp would produce inf * 0);
    # the detached off-diagonal row max keeps the logsumexp stable
    masked = logits + np.where(off > 0, 0.0, -np.inf).astype(dt)
    m = masked.data.max(axis=1, keepdims=True)
    denom = tz.log(tz.exp(masked - m).sum(axis=1, keepdims=True)) + m
    pos_term = (logits * pos_norm.astype(dt)).sum(axis=1, keepdims=True)
    return (denom - pos_term).mean()


def nt_logistic_from_similarity(S: Tensor, positive_map: list[set[int]], tau: float) -> Tensor:
    pos_norm, neg, _ = _masks(positive_map)
    dt = S.dtype
    logits = S * (1.0 / np.asarray(tau, dtype=dt))
    pos_term = (tz.softplus(-logits) * pos_norm.astype(dt)).sum(axis=1)
    neg_term = (tz.softplus(logits) * neg.astype(dt)).sum(axis=1)
    return (pos_term + neg_term).mean()


def margin_triplet_from_similarity(S: Tensor, positive_map: list[set[int]],
                                   margin: float) -> Tensor:
    pos_norm, neg, _ = _masks(positive_map)
    M = S.shape[0]
    pos = (pos_norm > 0).astype(np.float64)
    weight = pos[:, :, None] * neg[:, None, :]
    count = float(weight.sum())
    if count == 0:
        raise ValueError("margin_triplet: batch has no (anchor, positive, negative) triplets")
    dt = S.dtype
    D = 2.0 - S * np.asarray(2.0, dtype=dt)  # squared Euclidean on unit rows
    gaps = tz.relu(D.reshape(M, M, 1) - D.reshape(M, 1, M) + np.asarray(margin, dtype=dt))
    return (gaps * weight.astype(dt)).sum() / count


def nt_xent(batch: ViewBatch, tau: float) -> Tensor:
    """Mean over rows of the per-positive-averaged temperature-scaled CE term."""
    return nt_xent_from_similarity(_sim_from_batch(batch), batch.positive_map, tau)


def nt_logistic(batch: ViewBatch, tau: float) -> Tensor:
    """Softplus attraction to positives plus softplus repulsion from negatives."""
    return nt_logistic_from_similarity(_sim_from_batch(batch), batch.positive_map, tau)


def margin_triplet(batch: ViewBatch, margin: float) -> Tensor:
    """Batch-all triplet loss on squared Euclidean distances of unit rows."""
    return margin_triplet_from_similarity(_sim_from_batch(batch), batch.positive_map, margin)


def contrastive_loss(batch: ViewBatch, cfg: LossConfig) -> Tensor:
    if cfg.kind == "nt_xent":
        return nt_xent(batch, cfg.temperature)
    if cfg.kind == "nt_logistic":
        return nt_logistic(batch, cfg.temperature)
    return margin_triplet(batch, cfg.margin)

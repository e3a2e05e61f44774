"""Contrastive view-batch construction: instance, multi-view, contextual.

Builders assemble augmented frame stacks plus a symmetric positive map; the
trainer encodes the stack and attaches embeddings before loss evaluation.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .augment import AugmentConfig, augment_sequence, prepare_sequence
from .dataio import FrameSequence
from .tensor import Rng, Tensor

PAIR_KINDS = ("instance", "multiview", "contextual")


@dataclass
class ViewBatch:
    """M contrastive rows. ``sequences`` holds the stacked frames until the
    encoder replaces them with ``views`` ([M, embed_dim] embeddings)."""

    kind: str
    positive_map: list[set[int]]
    sequences: np.ndarray | None = None
    views: Tensor | None = None

    def __post_init__(self):
        if self.kind not in PAIR_KINDS:
            raise ValueError(f"unknown pair kind: {self.kind!r}")
        self.validate_positive_map()

    @property
    def num_rows(self) -> int:
        return len(self.positive_map)

    def validate_positive_map(self) -> None:
        for i, pos in enumerate(self.positive_map):
            if i in pos:
                raise ValueError(f"row {i} lists itself as a positive")
            for j in pos:
                if not 0 <= j < self.num_rows:
                    raise ValueError(f"row {i} has out-of-range positive {j}")
                if i not in self.positive_map[j]:
                    raise ValueError(f"positive map is asymmetric: {i}->{j}")

    def with_views(self, views: Tensor) -> "ViewBatch":
        if views.shape[0] != self.num_rows:
            raise ValueError(f"got {views.shape[0]} embeddings for {self.num_rows} rows")
        return ViewBatch(kind=self.kind, positive_map=self.positive_map,
                         sequences=None, views=views)


def _stack(seqs: list[FrameSequence]) -> np.ndarray:
    return np.stack([s.frames for s in seqs])


def make_instance_pairs(batch: list, cfg: AugmentConfig, rng: Rng) -> ViewBatch:
    """Two augmented views per sequence: rows [0,N) and [N,2N), P(i)={(i+N) mod 2N}."""
    n = len(batch)
    if n < 1:
        raise ValueError("make_instance_pairs needs at least one sequence")
    view1 = [augment_sequence(x, cfg, rng.child("view1", i)) for i, x in enumerate(batch)]
    view2 = [augment_sequence(x, cfg, rng.child("view2", i)) for i, x in enumerate(batch)]
    positives = [{(i + n) % (2 * n)} for i in range(2 * n)]
    return ViewBatch(kind="instance", positive_map=positives, sequences=_stack(view1 + view2))


def make_multiview(batch: list, n_views: int, cfg: AugmentConfig, rng: Rng) -> ViewBatch:
    """N mutually positive augmented views per sequence, view-major layout."""
    if n_views < 2:
        raise ValueError("make_multiview needs n_views >= 2")
    b = len(batch)
    if b < 1:
        raise ValueError("make_multiview needs at least one sequence")
    rows = []
    for v in range(n_views):
        for i, x in enumerate(batch):
            rows.append(augment_sequence(x, cfg, rng.child(f"view{v + 1}", i)))
    positives: list[set[int]] = []
    for v in range(n_views):
        for i in range(b):
            positives.append({w * b + i for w in range(n_views) if w != v})
    return ViewBatch(kind="multiview", positive_map=positives, sequences=_stack(rows))


def make_contextual(video_windows: list[list[FrameSequence]], cfg: AugmentConfig,
                    rng: Rng) -> ViewBatch:
    """Anchors are prepared windows; each gets an augmented positive, plus its
    temporal neighbors within the same video as extra positives."""
    anchors: list[FrameSequence] = []
    spans: list[tuple[int, int]] = []  # [start, end) anchor-row span per video
    for windows in video_windows:
        if not windows:
            raise ValueError("make_contextual: every video needs at least one window")
        start = len(anchors)
        anchors.extend(sorted(windows, key=lambda s: s.window_index))
        spans.append((start, len(anchors)))
    n = len(anchors)
    prepared = [prepare_sequence(a, cfg) for a in anchors]
    augmented = [augment_sequence(a, cfg, rng.child("augment", i)) for i, a in enumerate(anchors)]
    positives: list[set[int]] = [set() for _ in range(2 * n)]
    for i in range(n):
        positives[i].add(n + i)
        positives[n + i].add(i)
    for start, end in spans:
        for i in range(start, end - 1):
            positives[i].add(i + 1)
            positives[i + 1].add(i)
    return ViewBatch(kind="contextual", positive_map=positives,
                     sequences=_stack(prepared + augmented))

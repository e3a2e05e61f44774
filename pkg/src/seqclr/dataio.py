"""Dataset ingestion, windowing, stratified splits, and synthetic generation.

On-disk formats: a JSON-lines manifest (id, label, path, frame_count), packed
.fsq float sequences, and directories of lexicographically ordered image
frames. All loaded pixels are validated into [0,1].
"""

from __future__ import annotations

import io
import json
import struct
import zipfile
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from PIL import Image

from .tensor import Rng

LABELS = ("G", "PG", "PG-13", "R")
LABEL_MAP = {name: i for i, name in enumerate(LABELS)}

FSQ_MAGIC = b"FSQ1"


class DataError(ValueError):
    """Malformed dataset input (manifest, sequence file, or frame archive)."""


@dataclass(frozen=True)
class ManifestEntry:
    video_id: str
    label: str
    path: str
    frame_count: int
    fps: float | None = None

    @property
    def label_index(self) -> int:
        return LABEL_MAP[self.label]


@dataclass
class DatasetManifest:
    entries: list[ManifestEntry]
    root: Path | None = None

    @property
    def label_map(self) -> dict[str, int]:
        return dict(LABEL_MAP)

    def class_counts(self) -> dict[str, int]:
        counts = {name: 0 for name in LABELS}
        for e in self.entries:
            counts[e.label] += 1
        return counts

    def resolve_path(self, entry: ManifestEntry) -> Path:
        p = Path(entry.path)
        if not p.is_absolute() and self.root is not None:
            p = self.root / p
        return p

    def __len__(self) -> int:
        return len(self.entries)


@dataclass
class FrameSequence:
    """T×H×W×C pixel block in [0,1] with provenance tags."""

    frames: np.ndarray
    source_id: str = ""
    window_index: int = 0

    def __post_init__(self):
        f = self.frames
        if f.ndim != 4 or f.shape[0] < 1:
            raise DataError(f"FrameSequence needs [T,H,W,C] with T >= 1, got {f.shape}")
        if f.shape[3] not in (1, 3):
            raise DataError(f"FrameSequence channel count must be 1 or 3, got {f.shape[3]}")
        if not np.all(np.isfinite(f)):
            raise DataError("FrameSequence contains non-finite pixels")
        lo, hi = float(f.min()), float(f.max())
        if lo < -1e-6 or hi > 1.0 + 1e-6:
            raise DataError(f"FrameSequence pixels outside [0,1]: range [{lo}, {hi}]")

    @property
    def num_frames(self) -> int:
        return self.frames.shape[0]


# ---------------------------------------------------------------------------
# Manifest


def load_manifest(path: str | Path, check_paths: bool = True) -> DatasetManifest:
    path = Path(path)
    if not path.exists():
        raise DataError(f"manifest not found: {path}")
    entries: list[ManifestEntry] = []
    seen: set[str] = set()
    root = path.parent
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as e:
            raise DataError(f"{path}:{lineno}: bad manifest record: {e}") from None
        label = rec.get("label")
        if label not in LABEL_MAP:
            raise DataError(f"{path}:{lineno}: unknown label {label!r} (expected one of {LABELS})")
        vid = str(rec.get("id"))
        if vid in seen:
            raise DataError(f"{path}:{lineno}: duplicate video id {vid!r}")
        seen.add(vid)
        entry = ManifestEntry(video_id=vid, label=label, path=str(rec["path"]),
                              frame_count=int(rec["frame_count"]), fps=rec.get("fps"))
        if check_paths:
            p = Path(entry.path)
            if not p.is_absolute():
                p = root / p
            if not p.exists():
                raise DataError(f"{path}:{lineno}: data path missing: {p}")
        entries.append(entry)
    return DatasetManifest(entries=entries, root=root)


def write_manifest(manifest: DatasetManifest, path: str | Path) -> None:
    path = Path(path)
    with path.open("w") as f:
        for e in manifest.entries:
            rec = {"id": e.video_id, "label": e.label, "path": e.path,
                   "frame_count": e.frame_count}
            if e.fps is not None:
                rec["fps"] = e.fps
            f.write(json.dumps(rec) + "\n")


# ---------------------------------------------------------------------------
# .fsq packed sequences


def write_fsq(path: str | Path, frames: np.ndarray) -> None:
    frames = np.asarray(frames, dtype=np.float32)
    if frames.ndim != 4:
        raise DataError(f"write_fsq expects [T,H,W,C], got {frames.shape}")
    if frames.min() < 0.0 or frames.max() > 1.0:
        raise DataError("write_fsq: pixel values must lie in [0,1]")
    T, H, W, C = frames.shape
    with Path(path).open("wb") as f:
        f.write(FSQ_MAGIC)
        f.write(struct.pack("<4I", T, H, W, C))
        f.write(frames.astype("<f4").tobytes(order="C"))


def read_fsq_bytes(blob: bytes, source_id: str = "") -> FrameSequence:
    if len(blob) < 20 or blob[:4] != FSQ_MAGIC:
        raise DataError("not an FSQ1 stream (bad magic or truncated header)")
    T, H, W, C = struct.unpack("<4I", blob[4:20])
    if min(T, H, W, C) < 1:
        raise DataError(f"FSQ header has zero dimension: T={T} H={H} W={W} C={C}")
    expected = 20 + T * H * W * C * 4
    if len(blob) != expected:
        raise DataError(f"FSQ payload truncated or oversized: {len(blob)} bytes, expected {expected}")
    frames = np.frombuffer(blob, dtype="<f4", offset=20).reshape(T, H, W, C)
    return FrameSequence(frames=np.ascontiguousarray(frames), source_id=source_id)


def read_fsq(path: str | Path) -> FrameSequence:
    path = Path(path)
    return read_fsq_bytes(path.read_bytes(), source_id=path.stem)


# ---------------------------------------------------------------------------
# Frame directories


IMAGE_SUFFIXES = {".png", ".bmp", ".gif", ".tif", ".tiff", ".jpg", ".jpeg", ".webp"}


def _decode_frame(fp, origin) -> np.ndarray:
    try:
        with Image.open(fp) as im:
            mode = "L" if im.mode in ("L", "I", "I;16", "1") else "RGB"
            arr = np.asarray(im.convert(mode), dtype=np.float32) / 255.0
    except Exception as e:
        raise DataError(f"cannot decode frame {origin}: {e}") from None
    return arr[:, :, None] if arr.ndim == 2 else arr


def _stack_frames(frames: list[np.ndarray], origins: list) -> np.ndarray:
    shape = frames[0].shape
    for arr, origin in zip(frames, origins):
        if arr.shape != shape:
            raise DataError(f"frame {origin} has shape {arr.shape}, expected {shape}")
    return np.stack(frames)


def read_frame_dir(path: str | Path) -> FrameSequence:
    path = Path(path)
    files = sorted(p for p in path.iterdir()
                   if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES)
    if not files:
        raise DataError(f"no image frames in {path}")
    frames = [_decode_frame(p, p) for p in files]
    return FrameSequence(frames=_stack_frames(frames, files), source_id=path.name)


def read_frame_archive(blob: bytes, source_id: str = "") -> FrameSequence:
    """Decode a zip archive of image frames, ordered by member name."""
    try:
        zf = zipfile.ZipFile(io.BytesIO(blob))
    except zipfile.BadZipFile as e:
        raise DataError(f"not a zip archive: {e}") from None
    names = sorted(n for n in zf.namelist()
                   if not n.endswith("/") and Path(n).suffix.lower() in IMAGE_SUFFIXES)
    if not names:
        raise DataError("archive contains no image frames")
    frames = [_decode_frame(io.BytesIO(zf.read(n)), n) for n in names]
    return FrameSequence(frames=_stack_frames(frames, names), source_id=source_id)


def read_frame_sequence(entry, root: Path | None = None) -> FrameSequence:
    """Load a sequence from a manifest entry, an .fsq path, or a frame dir."""
    if isinstance(entry, ManifestEntry):
        p = Path(entry.path)
        if not p.is_absolute() and root is not None:
            p = root / p
        seq = read_frame_sequence(p)
        return replace(seq, source_id=entry.video_id)
    path = Path(entry)
    if path.is_dir():
        return read_frame_dir(path)
    if not path.exists():
        raise DataError(f"sequence path missing: {path}")
    return read_fsq(path)


def to_grayscale(frames: np.ndarray) -> np.ndarray:
    """Collapse an RGB stack [T,H,W,3] to luminance [T,H,W,1]."""
    if frames.shape[-1] == 1:
        return frames
    weights = np.array([0.299, 0.587, 0.114], dtype=frames.dtype)
    return (frames @ weights)[..., None]


# ---------------------------------------------------------------------------
# Windowing


def sample_windows(seq: FrameSequence, window_len: int = 20) -> list[FrameSequence]:
    """Consecutive non-overlapping windows; the last is padded by repetition."""
    T = seq.num_frames
    out = []
    n = -(-T // window_len)
    for w in range(n):
        chunk = seq.frames[w * window_len : (w + 1) * window_len]
        if chunk.shape[0] < window_len:
            pad = np.repeat(chunk[-1:], window_len - chunk.shape[0], axis=0)
            chunk = np.concatenate([chunk, pad], axis=0)
        out.append(FrameSequence(frames=chunk, source_id=seq.source_id, window_index=w))
    return out


# ---------------------------------------------------------------------------
# Synthetic generator


@dataclass(frozen=True)
class SyntheticSpec:
    """4-class moving-square videos: class c has side 8+4c and speed c+1 px/frame."""

    per_class: int = 50
    frames: int = 40
    height: int = 64
    width: int = 64
    channels: int = 1
    noise_sigma: float = 0.05
    background: float = 0.1
    foreground: float = 0.95


def render_synthetic_video(class_idx: int, spec: SyntheticSpec, rng: Rng) -> np.ndarray:
    """One [T,H,W,C] video for class ``class_idx``, bitwise seed-deterministic."""
    side = 8 + 4 * class_idx
    speed = class_idx + 1
    T, H, W, C = spec.frames, spec.height, spec.width, spec.channels
    g = rng.gen
    x = float(g.integers(0, max(W - side, 1)))
    y = float(g.integers(0, max(H - side, 1)))
    dx = speed * (1 if g.uniform() < 0.5 else -1)
    dy = speed * (1 if g.uniform() < 0.5 else -1)
    noise = g.normal(0.0, spec.noise_sigma, (T, H, W, C)) if spec.noise_sigma > 0 else None
    video = np.full((T, H, W, C), spec.background, dtype=np.float32)
    for t in range(T):
        r = min(max(int(round(y)), 0), H - side)
        c = min(max(int(round(x)), 0), W - side)
        video[t, r : r + side, c : c + side, :] = spec.foreground
        x += dx
        y += dy
        if x < 0:
            x, dx = -x, -dx
        elif x > W - side:
            x, dx = 2 * (W - side) - x, -dx
        if y < 0:
            y, dy = -y, -dy
        elif y > H - side:
            y, dy = 2 * (H - side) - y, -dy
    if noise is not None:
        video = video + noise.astype(np.float32)
    return np.clip(video, 0.0, 1.0)


def generate_synthetic(spec: SyntheticSpec, seed: int, out_dir: str | Path) -> DatasetManifest:
    """Render the dataset to .fsq files plus a manifest.jsonl under out_dir."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = Rng(seed)
    entries = []
    idx = 0
    for class_idx, label in enumerate(LABELS):
        for i in range(spec.per_class):
            video = render_synthetic_video(class_idx, spec, rng.child("video", idx))
            name = f"synth-{class_idx}-{i:04d}.fsq"
            write_fsq(out_dir / name, video)
            entries.append(ManifestEntry(video_id=f"synth-{class_idx}-{i:04d}",
                                         label=label, path=name,
                                         frame_count=spec.frames))
            idx += 1
    manifest = DatasetManifest(entries=entries, root=out_dir)
    write_manifest(manifest, out_dir / "manifest.jsonl")
    return manifest


# ---------------------------------------------------------------------------
# Splitting


def split_dataset(manifest: DatasetManifest, test_fraction: float = 0.25,
                  seed: int = 0) -> tuple[DatasetManifest, DatasetManifest]:
    """Stratified video-level split; test gets floor(fraction * n) per class."""
    by_class: dict[str, list[ManifestEntry]] = {name: [] for name in LABELS}
    for e in manifest.entries:
        by_class[e.label].append(e)
    rng = Rng(seed)
    train, test = [], []
    for class_idx, label in enumerate(LABELS):
        group = by_class[label]
        if not group:
            continue
        if len(group) < 2:
            raise DataError(f"class {label!r} has {len(group)} entries; need at least 2 to split")
        order = rng.child("split", class_idx).permutation(len(group))
        n_test = int(np.floor(test_fraction * len(group)))
        test_ids = set(order[:n_test].tolist())
        for i, e in enumerate(group):
            (test if i in test_ids else train).append(e)
    return (DatasetManifest(entries=train, root=manifest.root),
            DatasetManifest(entries=test, root=manifest.root))

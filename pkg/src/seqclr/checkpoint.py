"""Versioned binary checkpoints: JSON header plus little-endian tensor payload.

Layout: 8-byte magic, u32 format version, u64 header length, UTF-8 JSON
header, then raw tensor bytes. The header carries the model configuration,
a tensor table (name, dtype, shape, offset, nbytes), optional optimizer
state entries, and free-form metadata. Loading verifies the magic, the
version, payload sizes, and tensor shapes against the rebuilt model.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .layers import Model, ModelConfig, build_model
from .tensor import Rng

MAGIC = b"SEQCLRCK"
FORMAT_VERSION = 1


class CheckpointError(ValueError):
    """Raised for bad magic, version mismatch, truncation, or shape mismatch."""


@dataclass
class CheckpointMeta:
    """Everything in a checkpoint besides the weights themselves."""

    model_config: ModelConfig
    metadata: dict = field(default_factory=dict)
    optimizer: dict | None = None


def _tensor_table(arrays: dict[str, np.ndarray]) -> tuple[list[dict], bytes]:
    table = []
    chunks = []
    offset = 0
    for name, arr in arrays.items():
        raw = np.ascontiguousarray(arr).astype(arr.dtype.newbyteorder("<"), copy=False)
        data = raw.tobytes()
        table.append({"name": name, "dtype": str(arr.dtype), "shape": list(arr.shape),
                      "offset": offset, "nbytes": len(data)})
        chunks.append(data)
        offset += len(data)
    return table, b"".join(chunks)


def save_checkpoint(path: str | Path, model: Model, metadata: dict | None = None,
                    optimizer_state: dict | None = None) -> None:
    arrays = {name: t.data for name, t in model.parameters().items()}
    table, payload = _tensor_table(arrays)
    opt_blob = None
    if optimizer_state is not None:
        opt_table, opt_payload = _tensor_table(
            {f"opt.{k}": v for k, v in optimizer_state.get("arrays", {}).items()})
        for row in opt_table:
            row["offset"] += len(payload)
        payload += opt_payload
        opt_blob = {"table": opt_table,
                    "scalars": optimizer_state.get("scalars", {})}
    header = {
        "format_version": FORMAT_VERSION,
        "model_config": model.config.to_dict(),
        "tensors": table,
        "optimizer": opt_blob,
        "metadata": metadata or {},
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<IQ", FORMAT_VERSION, len(header_bytes)))
        fh.write(header_bytes)
        fh.write(payload)


def _read_header(blob: bytes) -> tuple[dict, bytes]:
    if len(blob) < len(MAGIC) + 12:
        raise CheckpointError("checkpoint truncated: missing header")
    if blob[: len(MAGIC)] != MAGIC:
        raise CheckpointError("not a checkpoint file: bad magic")
    version, header_len = struct.unpack_from("<IQ", blob, len(MAGIC))
    if version != FORMAT_VERSION:
        raise CheckpointError(
            f"unsupported checkpoint format version {version} (expected {FORMAT_VERSION})")
    start = len(MAGIC) + 12
    if len(blob) < start + header_len:
        raise CheckpointError("checkpoint truncated: header shorter than declared")
    try:
        header = json.loads(blob[start : start + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"corrupt checkpoint header: {exc}") from exc
    return header, blob[start + header_len :]


def _extract(table: list[dict], payload: bytes) -> dict[str, np.ndarray]:
    out = {}
    for row in table:
        end = row["offset"] + row["nbytes"]
        if end > len(payload):
            raise CheckpointError(f"checkpoint truncated: tensor {row['name']!r} "
                                  f"extends past end of file")
        dtype = np.dtype(row["dtype"]).newbyteorder("<")
        arr = np.frombuffer(payload[row["offset"] : end], dtype=dtype)
        expected = int(np.prod(row["shape"], dtype=np.int64)) if row["shape"] else 1
        if arr.size != expected:
            raise CheckpointError(f"tensor {row['name']!r}: payload holds {arr.size} "
                                  f"values, shape {row['shape']} needs {expected}")
        out[row["name"]] = arr.reshape(row["shape"]).astype(np.dtype(row["dtype"]))
    return out


def load_checkpoint(path: str | Path) -> tuple[Model, CheckpointMeta]:
    """Rebuild the model and load weights, verifying shapes tensor by tensor."""
    blob = Path(path).read_bytes()
    header, payload = _read_header(blob)
    cfg = ModelConfig.from_dict(header["model_config"])
    model = build_model(cfg, Rng(0))
    params = model.parameters()
    arrays = _extract(header["tensors"], payload)
    missing = sorted(set(params) - set(arrays))
    extra = sorted(set(arrays) - set(params))
    if missing or extra:
        raise CheckpointError(f"tensor table mismatch: missing {missing}, unexpected {extra}")
    for name, t in params.items():
        arr = arrays[name]
        if tuple(arr.shape) != t.shape:
            raise CheckpointError(f"tensor {name!r}: shape {tuple(arr.shape)} does not "
                                  f"match model shape {t.shape}")
        t.data = arr.astype(t.dtype, copy=True)
    optimizer = None
    if header.get("optimizer"):
        opt_arrays = _extract(header["optimizer"]["table"], payload)
        optimizer = {"arrays": {k[len("opt."):]: v for k, v in opt_arrays.items()},
                     "scalars": header["optimizer"].get("scalars", {})}
    meta = CheckpointMeta(model_config=cfg, metadata=header.get("metadata", {}),
                          optimizer=optimizer)
    return model, meta

"""HTTP inference service: health and model endpoints plus /classify.

The loaded model is shared and immutable; per-request state is isolated, so
concurrent identical requests produce identical bodies. ``latency_ms`` in the
response is the per-sequence inference latency calibrated once at model load
(a property of checkpoint + host), not per-request wall time, which keeps
response bodies deterministic; request timing goes to the server log.
"""

from __future__ import annotations

import hashlib
import logging
import time
import uuid
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .augment import AugmentConfig, prepare_sequence
from .dataio import (FSQ_MAGIC, LABELS, DataError, FrameSequence,
                     read_frame_archive, read_fsq_bytes, to_grayscale)
from .layers import Model, count_parameters
from .trainer import predict_logits

logger = logging.getLogger("seqclr.service")

DEFAULT_MAX_BYTES = 64 << 20


class BadPayload(DataError):
    """Request payload cannot be decoded into a frame sequence (HTTP 400)."""


@dataclass(frozen=True)
class ClassifyResult:
    """One classification: label, class probabilities, per-step attention."""

    predicted_label: str
    probabilities: list[float]
    attention_weights: list[float]
    model_id: str
    latency_ms: float | None

    def to_dict(self) -> dict:
        return {
            "predicted_label": self.predicted_label,
            "probabilities": self.probabilities,
            "attention_weights": self.attention_weights,
            "model_id": self.model_id,
            "latency_ms": self.latency_ms,
        }


def checkpoint_model_id(path: str | Path) -> str:
    """Stable content-derived identifier for a checkpoint file."""
    digest = hashlib.sha256(Path(path).read_bytes()).hexdigest()
    return f"ck-{digest[:12]}"


def decode_payload(blob: bytes, source_id: str = "upload") -> FrameSequence:
    """Decode a request body: packed .fsq or a zip archive of image frames."""
    if len(blob) < 4:
        raise BadPayload("payload too short to identify")
    if blob[:4] == FSQ_MAGIC:
        return read_fsq_bytes(blob, source_id=source_id)
    if blob[:2] == b"PK":
        return read_frame_archive(blob, source_id=source_id)
    raise BadPayload("payload is neither a packed sequence nor a frame archive")


def classify_sequence(model: Model, seq: FrameSequence, model_id: str,
                      latency_ms: float | None = None) -> ClassifyResult:
    """Shared inference path for the CLI predict verb and POST /classify."""
    gray = to_grayscale(seq.frames.astype(np.float32, copy=False))
    prepared = prepare_sequence(
        FrameSequence(frames=gray, source_id=seq.source_id),
        AugmentConfig(sequence_length=model.config.sequence_length))
    logits, attn = predict_logits(model, [prepared])
    shifted = logits[0].astype(np.float64) - logits[0].max()
    e = np.exp(shifted)
    probs = e / e.sum()
    return ClassifyResult(
        predicted_label=LABELS[int(probs.argmax())],
        probabilities=[float(p) for p in probs],
        attention_weights=[float(a) for a in attn[0].astype(np.float64)],
        model_id=model_id,
        latency_ms=latency_ms)


def calibrate_latency_ms(model: Model, repeats: int = 3) -> float:
    """Mean per-sequence inference latency, warm-up excluded."""
    T = model.config.sequence_length
    ramp = np.linspace(0.05, 0.95, T * 64 * 64, dtype=np.float32).reshape(T, 64, 64, 1)
    seq = prepare_sequence(FrameSequence(frames=ramp, source_id="calibration"),
                           AugmentConfig(sequence_length=T))
    predict_logits(model, [seq])
    t0 = time.monotonic()
    for _ in range(repeats):
        predict_logits(model, [seq])
    return round((time.monotonic() - t0) / repeats * 1000.0, 2)


def create_app(model: Model, model_id: str, max_bytes: int = DEFAULT_MAX_BYTES,
               latency_ms: float | None = None) -> FastAPI:
    """App factory over one immutable model; one model per process."""
    if latency_ms is None:
        latency_ms = calibrate_latency_ms(model)
    app = FastAPI(title="sequence classifier")
    app.add_middleware(CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
                       allow_headers=["*"])

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok", "model_id": model_id}

    @app.get("/model")
    def model_info() -> dict:
        return {
            "model_id": model_id,
            "config": model.config.to_dict(),
            "parameter_count": count_parameters(model),
            "labels": list(LABELS),
            "max_request_bytes": max_bytes,
        }

    @app.post("/classify")
    async def classify(request: Request):
        declared = request.headers.get("content-length")
        if declared is not None and declared.isdigit() and int(declared) > max_bytes:
            return JSONResponse(status_code=413, content={
                "error": f"payload exceeds {max_bytes} byte limit"})
        body = await request.body()
        if len(body) > max_bytes:
            return JSONResponse(status_code=413, content={
                "error": f"payload exceeds {max_bytes} byte limit"})
        content_type = request.headers.get("content-type", "")
        try:
            if content_type.startswith("multipart/form-data"):
                form = await request.form()
                uploads = [v for v in form.values() if hasattr(v, "read")]
                if not uploads:
                    raise BadPayload("multipart request carries no file field")
                blob = await uploads[0].read()
            else:
                blob = body
            seq = decode_payload(blob)
            t0 = time.monotonic()
            result = classify_sequence(model, seq, model_id, latency_ms=latency_ms)
            logger.info("classify source=%s frames=%d wall_ms=%.2f",
                        seq.source_id, seq.frames.shape[0],
                        (time.monotonic() - t0) * 1000.0)
            return JSONResponse(result.to_dict())
        except DataError as e:
            return JSONResponse(status_code=400, content={"error": str(e)})
        except Exception:
            incident = uuid.uuid4().hex[:12]
            logger.exception("classify failed, incident %s", incident)
            return JSONResponse(status_code=500, content={
                "error": "internal error", "incident_id": incident})

    return app


def serve(checkpoint_path: str | Path, host: str = "127.0.0.1", port: int = 8000,
          max_bytes: int = DEFAULT_MAX_BYTES) -> None:
    """Load a checkpoint and run the service until interrupted."""
    import uvicorn

    from .checkpoint import load_checkpoint

    model, _ = load_checkpoint(checkpoint_path)
    model_id = checkpoint_model_id(checkpoint_path)
    app = create_app(model, model_id, max_bytes=max_bytes)
    logger.info("serving %s on %s:%d", model_id, host, port)
    uvicorn.run(app, host=host, port=port, log_level="info")

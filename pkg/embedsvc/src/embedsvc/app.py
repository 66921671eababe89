"""HTTP face of the encoder: ``GET /v1/info`` and ``POST /v1/embed``.

The model loads lazily on first use. A load failure is remembered and every
later request answers 503 rather than retrying a configuration that cannot
work. Vectors are serialized as plain decimal numbers carrying float32
precision.
"""

from __future__ import annotations

import threading
from typing import Callable

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, ConfigDict, Field

from .backend import MaskCountError, MaskedEncoder, ModelLoadError


class EmbedRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    texts: list[str] = Field(min_length=1)
    deterministic: bool = True


class TextEmbedding(BaseModel):
    mask_vectors: list[list[float]]
    pair_vector: list[float]


class EmbedResponse(BaseModel):
    model_config = ConfigDict(protected_namespaces=())

    model_id: str
    dim: int
    results: list[TextEmbedding]


def create_app(loader: Callable[[], MaskedEncoder]) -> FastAPI:
    """Build the service around a deferred encoder constructor."""
    app = FastAPI(title="embedsvc")
    state: dict = {"encoder": None, "error": None}
    lock = threading.Lock()

    def encoder() -> MaskedEncoder:
        with lock:
            if state["error"] is not None:
                raise HTTPException(status_code=503, detail=state["error"])
            if state["encoder"] is None:
                try:
                    state["encoder"] = loader()
                except ModelLoadError as exc:
                    state["error"] = str(exc)
                    raise HTTPException(status_code=503, detail=state["error"])
            return state["encoder"]

    @app.get("/v1/info")
    def info() -> dict:
        enc = encoder()
        return {"model_id": enc.model_id, "dim": enc.dim, "mask_token": enc.mask_token}

    @app.post("/v1/embed", response_model=EmbedResponse)
    def embed(request: EmbedRequest) -> EmbedResponse:
        enc = encoder()
        try:
            vectors = enc.encode(request.texts, deterministic=request.deterministic)
        except MaskCountError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return EmbedResponse(
            model_id=enc.model_id,
            dim=enc.dim,
            results=[
                TextEmbedding(
                    mask_vectors=[[float(x) for x in row] for row in tv.mask_vectors],
                    pair_vector=[float(x) for x in tv.pair_vector],
                )
                for tv in vectors
            ],
        )

    return app

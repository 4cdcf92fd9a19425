"""The HTTP surface: POST /encode and GET /health.

Wire protocol (field names are load-bearing; clients match them byte-level):

* ``POST /encode`` body ``{"texts": ["...", ...]}`` with 1..64 strings ->
  ``{"dimension": d, "vectors": [[...], ...]}``, one vector per input, batch
  order preserved. Malformed bodies get 400, oversize batches 413.
* ``GET /health`` -> ``{"status": "ok", "model": "<id>", "dimension": d}``,
  or 503 until the model has loaded.

The service is stateless across requests; identical input gives bitwise-equal
vectors within one process lifetime.
"""

from __future__ import annotations

import json
import logging
import os
from contextlib import asynccontextmanager
from typing import Callable

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .encoders import DEFAULT_MODEL_ID, Encoder, load_encoder

logger = logging.getLogger(__name__)

MAX_BATCH = 64

ENV_MODEL = "ENCODER_MODEL"
ENV_PORT = "ENCODER_PORT"


def _error(status: int, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": message})


def create_app(loader: Callable[[], Encoder] | None = None) -> FastAPI:
    """App factory; ``loader`` runs once at startup (default: env-configured model)."""

    def default_loader() -> Encoder:
        model_id = os.environ.get(ENV_MODEL, DEFAULT_MODEL_ID)
        logger.info("loading encoder %r", model_id)
        return load_encoder(model_id)

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        app.state.encoder = (loader or default_loader)()
        logger.info(
            "encoder ready: %s (dimension %d)",
            app.state.encoder.model_id,
            app.state.encoder.dimension,
        )
        yield

    app = FastAPI(title="encoder-service", lifespan=lifespan)
    app.state.encoder = None

    @app.get("/health")
    def health() -> JSONResponse:
        encoder = app.state.encoder
        if encoder is None:
            return _error(503, "model is still loading")
        return JSONResponse(
            {"status": "ok", "model": encoder.model_id, "dimension": encoder.dimension}
        )

    @app.post("/encode")
    async def encode(request: Request) -> JSONResponse:
        encoder = app.state.encoder
        if encoder is None:
            return _error(503, "model is still loading")
        try:
            payload = json.loads(await request.body())
        except json.JSONDecodeError:
            return _error(400, "body is not valid JSON")
        if not isinstance(payload, dict) or "texts" not in payload:
            return _error(400, "body must be an object with a 'texts' field")
        texts = payload["texts"]
        if not isinstance(texts, list) or not texts or not all(isinstance(t, str) for t in texts):
            return _error(400, "'texts' must be a non-empty list of strings")
        if len(texts) > MAX_BATCH:
            return _error(413, f"batch size {len(texts)} exceeds the maximum of {MAX_BATCH}")
        vectors = encoder.encode_batch(texts)
        return JSONResponse({"dimension": encoder.dimension, "vectors": vectors.tolist()})

    return app


def main() -> None:
    import uvicorn

    logging.basicConfig(level=logging.INFO)
    uvicorn.run(create_app(), host="0.0.0.0", port=int(os.environ.get(ENV_PORT, "8765")))


if __name__ == "__main__":
    main()

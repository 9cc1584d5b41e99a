"""HTTP face of the encoder.

POST /embed  {"texts": [...]}  -> 200 {"dim": d, "vectors": [[...], ...]}
GET  /health                   -> 200 {"dim": d, "model": name}

Malformed requests (no JSON body, missing or empty texts, more texts
than max_batch, non-string items, a text over the byte limit) answer
400; an encoder crash answers 500; both endpoints answer 503 until the
model has loaded. Request bodies are validated by hand so every client
error maps to 400 rather than a framework-specific status.

Requests are stateless and uncached (the ranking client memoizes on its
side). The encoder call is serialized behind a lock because not every
model is reentrant; the protocol makes no latency promise.
"""
from __future__ import annotations

import json
import logging
import threading
from contextlib import asynccontextmanager
from typing import Callable

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from starlette.concurrency import run_in_threadpool

from embed_sidecar.config import SidecarConfig
from embed_sidecar.encoder import Encoder, load_encoder

logger = logging.getLogger("embed_sidecar")


def _error(status: int, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": message})


def create_app(
    config: SidecarConfig | None = None,
    encoder_factory: Callable[[str], Encoder] = load_encoder,
) -> FastAPI:
    settings = SidecarConfig.from_env() if config is None else config

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        app.state.encoder = encoder_factory(settings.model_name)
        logger.info("serving %s (dim %d)", app.state.encoder.name, app.state.encoder.dim)
        yield

    app = FastAPI(lifespan=lifespan, openapi_url=None, docs_url=None)
    app.state.config = settings
    app.state.encoder = None
    app.state.encode_lock = threading.Lock()

    @app.get("/health")
    def health(request: Request):
        encoder = request.app.state.encoder
        if encoder is None:
            return _error(503, "model is still loading")
        return {"dim": encoder.dim, "model": encoder.name}

    @app.post("/embed")
    async def embed(request: Request):
        encoder = request.app.state.encoder
        if encoder is None:
            return _error(503, "model is still loading")
        try:
            payload = json.loads(await request.body())
        except (json.JSONDecodeError, UnicodeDecodeError):
            return _error(400, "body must be a JSON object")
        if not isinstance(payload, dict) or "texts" not in payload:
            return _error(400, 'body must be {"texts": [...]}')
        texts = payload["texts"]
        if not isinstance(texts, list) or not texts:
            return _error(400, "texts must be a non-empty list")
        if len(texts) > settings.max_batch:
            return _error(400, f"batch of {len(texts)} exceeds max_batch {settings.max_batch}")
        for i, text in enumerate(texts):
            if not isinstance(text, str):
                return _error(400, f"texts[{i}] is not a string")
            if len(text.encode("utf-8")) > settings.max_text_bytes:
                return _error(400, f"texts[{i}] exceeds {settings.max_text_bytes} bytes")

        def encode_locked() -> list[list[float]]:
            with request.app.state.encode_lock:
                return encoder.encode(texts)

        try:
            vectors = await run_in_threadpool(encode_locked)
        except Exception:
            logger.exception("encoder failed on a batch of %d", len(texts))
            return _error(500, "model failure")
        return {"dim": encoder.dim, "vectors": vectors}

    return app

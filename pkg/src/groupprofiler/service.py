"""HTTP JSON facade over a frozen checkpoint."""
from __future__ import annotations

import logging
import uuid
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .base import BaseProfiler
from .checkpoint import checkpoint_file_hash, load_checkpoint
from .errors import ValidationError

log = logging.getLogger(__name__)

DEFAULT_TOP_N = 10


class ProfileRequest(BaseModel):
    known: dict[str, str] = Field(default_factory=dict)
    top_n: Optional[int] = None


class ShiftRequest(BaseModel):
    base: dict[str, str] = Field(default_factory=dict)
    added: dict[str, str] = Field(default_factory=dict)
    top_n: Optional[int] = None


def _truncated(schema, facet_name: str, dist, top_n: int) -> dict:
    facet = schema.facets[schema.facet_index(facet_name)]
    order = sorted(
        range(len(dist)), key=lambda j: (-dist[j], facet.vocabulary[j])
    )[:top_n]
    values = [
        {"value": facet.vocabulary[j], "probability": float(dist[j])} for j in order
    ]
    residual = max(0.0, 1.0 - sum(v["probability"] for v in values))
    return {"values": values, "other": residual}


def create_app(
    checkpoint_path=None,
    model: Optional[BaseProfiler] = None,
    top_n_cap: int = 100,
    cors_origins: Optional[list[str]] = None,
) -> FastAPI:
    if model is None:
        if checkpoint_path is None:
            raise ValidationError("need a checkpoint path or a fitted model")
        model = load_checkpoint(checkpoint_path)
    ckpt_hash = checkpoint_file_hash(checkpoint_path) if checkpoint_path else "in-memory"
    kind = type(model).__name__
    schema = model.schema_

    app = FastAPI(title="group profiler")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=cors_origins or ["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(RequestValidationError)
    async def malformed_request(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"errors": exc.errors()})

    @app.exception_handler(ValidationError)
    async def invalid_query(request: Request, exc: ValidationError):
        return JSONResponse(status_code=422, content={"error": str(exc)})

    @app.exception_handler(Exception)
    async def internal_error(request: Request, exc: Exception):
        error_id = uuid.uuid4().hex
        log.exception("internal error %s", error_id)
        return JSONResponse(status_code=500, content={"error_id": error_id})

    def clamp_top_n(top_n: Optional[int]) -> int:
        if top_n is None:
            return DEFAULT_TOP_N
        if top_n < 1:
            raise ValidationError("top_n must be >= 1")
        return min(top_n, top_n_cap)

    @app.get("/health")
    async def health():
        return {"status": "ok"}

    @app.get("/schema")
    async def get_schema():
        return {
            "schema_version": 1,
            "model": {"kind": kind, "checkpoint_hash": ckpt_hash},
            "facets": [
                {
                    "name": f.name,
                    "size": f.size,
                    "values": [
                        f.vocabulary[j]
                        for j in sorted(
                            range(f.size),
                            key=lambda j: (-f.value_counts[j], f.vocabulary[j]),
                        )
                    ],
                }
                for f in schema
            ],
        }

    @app.post("/profile")
    async def profile(req: ProfileRequest):
        top_n = clamp_top_n(req.top_n)
        result = model.profile(req.known)
        return {
            "fixed": result.fixed,
            "expectations": {
                name: _truncated(schema, name, dist, top_n)
                for name, dist in result.expectations.items()
            },
            "model": {"kind": kind, "checkpoint_hash": ckpt_hash},
        }

    @app.post("/shift")
    async def shift(req: ShiftRequest):
        report = model.shift(req.base, req.added)
        combined = {**req.base, **req.added}
        after = model.profile(combined)
        top_n = clamp_top_n(req.top_n)
        return {
            "base": report.base,
            "added": report.added,
            "shifts": {
                e.facet: {
                    "js_divergence": e.js_divergence,
                    "top_before": e.top_before,
                    "top_after": e.top_after,
                    "argmax_changed": e.argmax_changed,
                }
                for e in report.entries
            },
            "expectations": {
                name: _truncated(schema, name, dist, top_n)
                for name, dist in after.expectations.items()
            },
            "model": {"kind": kind, "checkpoint_hash": ckpt_hash},
        }

    return app


def serve(checkpoint_path, host: str = "127.0.0.1", port: int = 8000, **kwargs) -> None:
    import uvicorn

    app = create_app(checkpoint_path=checkpoint_path, **kwargs)
    uvicorn.run(app, host=host, port=port)

"""HTTP face of the pipeline, consumed by the web console.

POST /v1/geolocate runs search -> prompt -> provider for one query and
returns everything a client needs to draw the result: the prediction,
both anchor lists with scores, the exact prompt text and the raw model
response. GET /v1/index/stats reports header-derived gallery stats.

Every error body is {"code": ..., "message": ...}; stack traces and
credentials never leave the process.
"""

from __future__ import annotations

import base64
import binascii
import json
import threading
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import requests
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .gallery import open_gallery
from .prompting import ImageRef, PromptTemplate, build_prompt, default_template
from .providers import (
    Gateway,
    PredictionError,
    ProviderConfig,
    ProviderConfigError,
    TransportError,
)
from .search import SearchError, search

LOCAL_PROVIDERS = ("mock-midpoint", "nearest-neighbor")


class ServiceError(ValueError):
    """Bad service configuration."""


@dataclass
class ServiceConfig:
    gallery_path: str
    host: str = "127.0.0.1"
    port: int = 8008
    template_path: str | None = None
    default_k_pos: int = 16
    default_k_neg: int = 16
    default_provider: str = "mock-midpoint"
    providers: dict[str, ProviderConfig] = field(default_factory=dict)
    extractor_url: str | None = None
    body_limit_bytes: int = 20 * 1024 * 1024
    cors_origins: list[str] = field(default_factory=lambda: ["*"])


def load_service_config(path: str | Path) -> ServiceConfig:
    """Read a JSON service configuration file.

    Providers are declared under "providers" by name; the local providers
    are always available without declaration. Credentials are referenced
    by environment variable name only.
    """
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ServiceError(f"cannot load service config {path}: {exc}") from exc
    if "gallery" not in doc:
        raise ServiceError(f"{path}: service config needs a \"gallery\" path")
    providers = {}
    for name, spec in doc.get("providers", {}).items():
        providers[name] = ProviderConfig(**spec)
    return ServiceConfig(
        gallery_path=doc["gallery"],
        host=doc.get("host", "127.0.0.1"),
        port=int(doc.get("port", 8008)),
        template_path=doc.get("template"),
        default_k_pos=int(doc.get("k_pos", 16)),
        default_k_neg=int(doc.get("k_neg", 16)),
        default_provider=doc.get("default_provider", "mock-midpoint"),
        providers=providers,
        extractor_url=doc.get("extractor_url"),
        body_limit_bytes=int(doc.get("body_limit_mb", 20)) * 1024 * 1024,
        cors_origins=doc.get("cors_origins", ["*"]),
    )


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


class GeolocateRequest(BaseModel):
    embedding: list[float] | None = None
    image_b64: str | None = None
    k_pos: int | None = None
    k_neg: int | None = None
    provider: str | None = None


def create_app(cfg: ServiceConfig) -> FastAPI:
    """Build the service app; the gallery must be loadable right now."""
    gallery = open_gallery(cfg.gallery_path)
    template = (
        PromptTemplate.from_file(cfg.template_path) if cfg.template_path else default_template()
    )
    gateways: dict[str, Gateway] = {}
    gateway_lock = threading.Lock()

    def gateway_for(name: str) -> Gateway:
        with gateway_lock:
            if name not in gateways:
                if name in cfg.providers:
                    gateways[name] = Gateway(cfg.providers[name])
                elif name in LOCAL_PROVIDERS:
                    gateways[name] = Gateway(ProviderConfig(kind=name))
                else:
                    known = sorted(set(cfg.providers) | set(LOCAL_PROVIDERS))
                    raise ApiError(400, "unknown_provider", f"unknown provider {name!r}; configured: {known}")
            return gateways[name]

    app = FastAPI(title="georag", version="0.1.0")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=cfg.cors_origins,
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(ApiError)
    async def api_error_handler(_request: Request, exc: ApiError):
        return JSONResponse(status_code=exc.status, content={"code": exc.code, "message": exc.message})

    @app.exception_handler(RequestValidationError)
    async def validation_handler(_request: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=400,
            content={"code": "malformed_body", "message": str(exc)[:500]},
        )

    @app.middleware("http")
    async def limit_body(request: Request, call_next):
        length = request.headers.get("content-length")
        if length and length.isdigit() and int(length) > cfg.body_limit_bytes:
            return JSONResponse(
                status_code=413,
                content={
                    "code": "body_too_large",
                    "message": f"request body exceeds {cfg.body_limit_bytes} bytes",
                },
            )
        return await call_next(request)

    @app.get("/v1/index/stats")
    def index_stats():
        return {
            "count": gallery.count,
            "dim": gallery.dim,
            "checksum": f"{gallery.checksum:#018x}",
            "gallery_path": gallery.path,
        }

    def embed_via_extractor(image_bytes: bytes) -> np.ndarray:
        if not cfg.extractor_url:
            raise ApiError(
                503,
                "extractor_unconfigured",
                "no embedding extractor is configured; submit an \"embedding\" instead of \"image_b64\"",
            )
        url = cfg.extractor_url.rstrip("/") + "/v1/embed"
        try:
            resp = requests.post(
                url,
                data=image_bytes,
                headers={"Content-Type": "application/octet-stream"},
                timeout=60,
            )
        except requests.RequestException as exc:
            raise ApiError(503, "extractor_unavailable", f"extractor at {url} unreachable: {exc.__class__.__name__}")
        if resp.status_code != 200:
            raise ApiError(503, "extractor_unavailable", f"extractor returned HTTP {resp.status_code}")
        payload = resp.json()
        embedding = np.asarray(payload.get("embedding", []), dtype=np.float64)
        if embedding.shape[0] != gallery.dim:
            raise ApiError(
                503,
                "extractor_mismatch",
                f"extractor produced dimension {embedding.shape[0]}, gallery needs {gallery.dim}",
            )
        return embedding

    @app.post("/v1/geolocate")
    def geolocate_endpoint(body: GeolocateRequest):
        has_embedding = body.embedding is not None
        has_image = body.image_b64 is not None
        if has_embedding == has_image:
            raise ApiError(
                422,
                "payload_choice",
                "provide exactly one of \"embedding\" or \"image_b64\"",
            )
        k_pos = body.k_pos if body.k_pos is not None else cfg.default_k_pos
        k_neg = body.k_neg if body.k_neg is not None else cfg.default_k_neg
        if k_pos < 1 or k_neg < 1:
            raise ApiError(400, "bad_k", f"k_pos and k_neg must be >= 1, got {k_pos}/{k_neg}")
        gateway = gateway_for(body.provider or cfg.default_provider)

        image_ref = None
        if has_image:
            try:
                image_bytes = base64.b64decode(body.image_b64, validate=True)
            except (binascii.Error, ValueError):
                raise ApiError(400, "bad_image", "image_b64 is not valid base64")
            embedding = embed_via_extractor(image_bytes)
            image_ref = ImageRef(data=image_bytes)
        else:
            embedding = np.asarray(body.embedding, dtype=np.float64)

        try:
            neighbors = search(gallery, embedding, k_pos=k_pos, k_neg=k_neg)
        except SearchError as exc:
            raise ApiError(400, "bad_embedding", str(exc))
        prompt = build_prompt(neighbors, template, image_ref=image_ref)
        try:
            prediction = gateway.geolocate(prompt)
        except TransportError as exc:
            raise ApiError(502, "provider_transport", str(exc))
        except ProviderConfigError as exc:
            raise ApiError(502, "provider_config", str(exc))
        except PredictionError as exc:
            raise ApiError(502, "provider_failed", str(exc))

        def hits_json(hits):
            return [
                {"id": h.id, "lat": h.location.lat, "lon": h.location.lon, "score": h.score}
                for h in hits
            ]

        return {
            "prediction": {"lat": prediction.location.lat, "lon": prediction.location.lon},
            "fallback_used": prediction.fallback_used,
            "provider": prediction.provider,
            "positives": hits_json(neighbors.positives),
            "negatives": hits_json(neighbors.negatives),
            "prompt_text": prompt.text,
            "raw_response": prediction.raw_response,
            "latency_ms": prediction.latency_ms,
        }

    return app


def serve(cfg: ServiceConfig):
    """Run the service until terminated."""
    import uvicorn

    app = create_app(cfg)
    uvicorn.run(app, host=cfg.host, port=cfg.port, log_level="info")

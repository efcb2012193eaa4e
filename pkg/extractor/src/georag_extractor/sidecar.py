"""HTTP sidecar for live image queries: POST /v1/embed with raw image
bytes, get back the unit-norm embedding.
"""

from __future__ import annotations

import io

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from PIL import Image, UnidentifiedImageError

from .encoder import ClipEncoder


def create_app(encoder: ClipEncoder) -> FastAPI:
    app = FastAPI(title="georag-extractor", version="0.1.0")

    @app.post("/v1/embed")
    async def embed(request: Request):
        payload = await request.body()
        try:
            with Image.open(io.BytesIO(payload)) as img:
                image = img.convert("RGB")
        except (OSError, UnidentifiedImageError):
            return JSONResponse(
                status_code=400,
                content={"code": "bad_image", "message": "request body is not a decodable image"},
            )
        vec = encoder.encode([image])[0]
        return {"embedding": [float(x) for x in vec], "dim": encoder.dim}

    return app


def serve(encoder: ClipEncoder, host: str = "127.0.0.1", port: int = 8790):
    import uvicorn

    uvicorn.run(create_app(encoder), host=host, port=port, log_level="info")

import io

import numpy as np
from fastapi.testclient import TestClient
from PIL import Image

from georag_extractor.sidecar import create_app


def png_bytes(seed):
    rng = np.random.default_rng(seed)
    img = Image.fromarray((rng.random((40, 40, 3)) * 255).astype("uint8"))
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


def test_embed_returns_unit_norm_embedding(tiny_encoder):
    client = TestClient(create_app(tiny_encoder))
    resp = client.post("/v1/embed", content=png_bytes(1))
    assert resp.status_code == 200
    doc = resp.json()
    assert doc["dim"] == tiny_encoder.dim
    assert len(doc["embedding"]) == tiny_encoder.dim
    norm = float(np.linalg.norm(doc["embedding"]))
    assert abs(norm - 1.0) <= 1e-3


def test_same_image_twice_gives_identical_embedding(tiny_encoder):
    client = TestClient(create_app(tiny_encoder))
    payload = png_bytes(2)
    a = client.post("/v1/embed", content=payload).json()["embedding"]
    b = client.post("/v1/embed", content=payload).json()["embedding"]
    assert a == b


def test_undecodable_image_is_400(tiny_encoder):
    client = TestClient(create_app(tiny_encoder))
    resp = client.post("/v1/embed", content=b"definitely not an image")
    assert resp.status_code == 400
    assert resp.json()["code"] == "bad_image"

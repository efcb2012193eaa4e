"""Spin up the HTTP service in-process and talk to it like the console does."""

import tempfile
import threading
import time
from pathlib import Path

import numpy as np
import requests
import uvicorn

from georag import EmbeddingRecord, GeoCoordinate, build_gallery
from georag.service import ServiceConfig, create_app

workdir = Path(tempfile.mkdtemp())
rng = np.random.default_rng(11)

dim, n = 32, 100
vectors = rng.standard_normal((n, dim))
records = [
    EmbeddingRecord(
        id=i,
        vector=vectors[i],
        location=GeoCoordinate(float(rng.uniform(-60, 60)), float(rng.uniform(-170, 170))),
    )
    for i in range(n)
]
gallery_path = workdir / "svc.gallery"
build_gallery(records, dim, gallery_path)

cfg = ServiceConfig(gallery_path=str(gallery_path), host="127.0.0.1", port=8765)
server = uvicorn.Server(uvicorn.Config(create_app(cfg), host=cfg.host, port=cfg.port, log_level="warning"))
threading.Thread(target=server.run, daemon=True).start()
while not server.started:
    time.sleep(0.05)
base = f"http://{cfg.host}:{cfg.port}"

print("GET /v1/index/stats")
print(" ", requests.get(f"{base}/v1/index/stats").json())

query = (vectors[17] / np.linalg.norm(vectors[17])).tolist()
resp = requests.post(
    f"{base}/v1/geolocate",
    json={"embedding": query, "provider": "mock-midpoint", "k_pos": 4, "k_neg": 4},
).json()
print("POST /v1/geolocate ->")
print("  prediction:", resp["prediction"])
print("  positives:", [(h["id"], round(h["score"], 3)) for h in resp["positives"]])
print("  negatives:", [(h["id"], round(h["score"], 3)) for h in resp["negatives"]])
print("  prompt_text is", len(resp["prompt_text"]), "chars; raw_response:", resp["raw_response"])

server.should_exit = True

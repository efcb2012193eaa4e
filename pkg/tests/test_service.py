import base64
import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np
import pytest
from fastapi.testclient import TestClient

from georag.providers import ProviderConfig
from georag.service import ServiceConfig, create_app, load_service_config

from conftest import make_gallery, unit_rows

DIM = 16


@pytest.fixture
def gallery(tmp_path):
    vectors = unit_rows(10, DIM, seed=1)
    coords = [(0.0, float(10 * (i + 1))) for i in range(10)]
    return make_gallery(tmp_path, vectors, coords=coords)


def app_client(gallery, **cfg_overrides):
    cfg = ServiceConfig(gallery_path=gallery.path, **cfg_overrides)
    return TestClient(create_app(cfg)), gallery


class StubExtractor:
    def __init__(self, embedding, status=200):
        body = json.dumps({"embedding": list(map(float, embedding)), "dim": len(embedding)}).encode()

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self):
                self.rfile.read(int(self.headers.get("Content-Length", 0)))
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)

            def log_message(self, *args):
                pass

        self._server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        threading.Thread(target=self._server.serve_forever, daemon=True).start()

    @property
    def url(self):
        host, port = self._server.server_address
        return f"http://{host}:{port}"

    def close(self):
        self._server.shutdown()
        self._server.server_close()


class TestStats:
    def test_header_derived_stats(self, gallery):
        client, g = app_client(gallery)
        resp = client.get("/v1/index/stats")
        assert resp.status_code == 200
        doc = resp.json()
        assert doc["count"] == 10
        assert doc["dim"] == DIM
        assert doc["checksum"] == f"{g.checksum:#018x}"
        assert doc["gallery_path"] == g.path

    def test_stats_stable_across_calls(self, gallery):
        client, _ = app_client(gallery)
        assert client.get("/v1/index/stats").json() == client.get("/v1/index/stats").json()


class TestGeolocate:
    def test_self_retrieval_with_nearest_neighbor(self, gallery):
        client, g = app_client(gallery)
        emb = np.asarray(g.vectors[3], dtype=float).tolist()
        resp = client.post(
            "/v1/geolocate",
            json={"embedding": emb, "provider": "nearest-neighbor", "k_pos": 1, "k_neg": 1},
        )
        assert resp.status_code == 200
        doc = resp.json()
        assert doc["prediction"] == {"lat": 0.0, "lon": 40.0}
        assert doc["fallback_used"] is False
        assert len(doc["positives"]) == 1
        assert doc["positives"][0]["id"] == 3
        assert doc["positives"][0]["score"] == pytest.approx(1.0, abs=1e-5)
        assert "prompt_text" in doc and "40.000000" in doc["prompt_text"]
        assert doc["raw_response"]
        assert doc["latency_ms"] >= 0.0

    def test_midpoint_provider(self, gallery, tmp_path):
        # craft a query equally close to records 0 and 1 only
        client, g = app_client(gallery)
        v = np.asarray(g.vectors[0], dtype=np.float64) + np.asarray(g.vectors[1], dtype=np.float64)
        v /= np.linalg.norm(v)
        resp = client.post(
            "/v1/geolocate",
            json={"embedding": v.tolist(), "provider": "mock-midpoint", "k_pos": 2, "k_neg": 1},
        )
        assert resp.status_code == 200
        doc = resp.json()
        # records 0 and 1 sit at lon 10 and 20 on the equator
        assert doc["prediction"]["lat"] == pytest.approx(0.0, abs=1e-9)
        assert doc["prediction"]["lon"] == pytest.approx(15.0, abs=1e-6)

    def test_k_defaults_and_clamping(self, gallery):
        client, g = app_client(gallery, default_k_pos=4, default_k_neg=3)
        emb = np.asarray(g.vectors[0], dtype=float).tolist()
        doc = client.post("/v1/geolocate", json={"embedding": emb}).json()
        assert len(doc["positives"]) == 4
        assert len(doc["negatives"]) == 3
        doc = client.post("/v1/geolocate", json={"embedding": emb, "k_pos": 99, "k_neg": 99}).json()
        assert len(doc["positives"]) == 10  # clamped to gallery count
        assert len(doc["negatives"]) == 10

    def test_both_payloads_is_422(self, gallery):
        client, g = app_client(gallery)
        emb = [0.0] * DIM
        resp = client.post("/v1/geolocate", json={"embedding": emb, "image_b64": "aGk="})
        assert resp.status_code == 422
        assert resp.json()["code"] == "payload_choice"

    def test_neither_payload_is_422(self, gallery):
        client, _ = app_client(gallery)
        resp = client.post("/v1/geolocate", json={})
        assert resp.status_code == 422
        assert resp.json()["code"] == "payload_choice"

    def test_wrong_dimension_is_400(self, gallery):
        client, _ = app_client(gallery)
        resp = client.post("/v1/geolocate", json={"embedding": [0.5] * (DIM + 2)})
        assert resp.status_code == 400
        assert resp.json()["code"] == "bad_embedding"

    def test_malformed_body_is_400(self, gallery):
        client, _ = app_client(gallery)
        resp = client.post("/v1/geolocate", json={"embedding": "not-a-list"})
        assert resp.status_code == 400
        assert resp.json()["code"] == "malformed_body"

    def test_unknown_provider_is_400(self, gallery):
        client, _ = app_client(gallery)
        resp = client.post("/v1/geolocate", json={"embedding": [0.5] * DIM, "provider": "oracle"})
        assert resp.status_code == 400
        assert resp.json()["code"] == "unknown_provider"

    def test_bad_k_is_400(self, gallery):
        client, _ = app_client(gallery)
        resp = client.post("/v1/geolocate", json={"embedding": [0.5] * DIM, "k_pos": 0})
        assert resp.status_code == 400
        assert resp.json()["code"] == "bad_k"

    def test_provider_transport_error_is_502(self, gallery):
        dead = ProviderConfig(
            kind="remote-chat", endpoint="http://127.0.0.1:1/nope", max_retries=0, backoff_base_s=0.01
        )
        client, _ = app_client(gallery, providers={"gpt": dead})
        resp = client.post("/v1/geolocate", json={"embedding": [0.5] * DIM, "provider": "gpt"})
        assert resp.status_code == 502
        assert resp.json()["code"] == "provider_transport"

    def test_error_bodies_have_code_and_message(self, gallery):
        client, _ = app_client(gallery)
        resp = client.post("/v1/geolocate", json={})
        doc = resp.json()
        assert set(doc) == {"code", "message"}


class TestImagePath:
    def test_image_without_extractor_is_503(self, gallery):
        client, _ = app_client(gallery)
        resp = client.post("/v1/geolocate", json={"image_b64": base64.b64encode(b"img").decode()})
        assert resp.status_code == 503
        assert resp.json()["code"] == "extractor_unconfigured"
        assert "embedding" in resp.json()["message"]

    def test_bad_base64_is_400(self, gallery):
        client, _ = app_client(gallery, extractor_url="http://127.0.0.1:1")
        resp = client.post("/v1/geolocate", json={"image_b64": "!!!not-base64!!!"})
        assert resp.status_code == 400
        assert resp.json()["code"] == "bad_image"

    def test_extractor_unreachable_is_503(self, gallery):
        client, _ = app_client(gallery, extractor_url="http://127.0.0.1:1")
        resp = client.post("/v1/geolocate", json={"image_b64": base64.b64encode(b"img").decode()})
        assert resp.status_code == 503
        assert resp.json()["code"] == "extractor_unavailable"

    def test_extractor_flow(self, gallery):
        emb = np.asarray(gallery.vectors[5], dtype=float)
        stub = StubExtractor(emb)
        try:
            client, g = app_client(gallery, extractor_url=stub.url)
            resp = client.post(
                "/v1/geolocate",
                json={
                    "image_b64": base64.b64encode(b"fake-image-bytes").decode(),
                    "provider": "nearest-neighbor",
                    "k_pos": 1,
                    "k_neg": 1,
                },
            )
            assert resp.status_code == 200
            assert resp.json()["prediction"] == {"lat": 0.0, "lon": 60.0}
        finally:
            stub.close()

    def test_extractor_dimension_mismatch_is_503(self, gallery):
        stub = StubExtractor([0.5] * (DIM + 4))
        try:
            client, _ = app_client(gallery, extractor_url=stub.url)
            resp = client.post("/v1/geolocate", json={"image_b64": base64.b64encode(b"x").decode()})
            assert resp.status_code == 503
            assert resp.json()["code"] == "extractor_mismatch"
        finally:
            stub.close()


class TestLimitsAndCors:
    def test_oversized_body_is_413(self, gallery):
        client, _ = app_client(gallery, body_limit_bytes=1000)
        resp = client.post(
            "/v1/geolocate",
            content=b"x" * 2000,
            headers={"Content-Type": "application/json", "Content-Length": "2000"},
        )
        assert resp.status_code == 413
        assert resp.json()["code"] == "body_too_large"

    def test_cors_headers_present(self, gallery):
        client, _ = app_client(gallery, cors_origins=["http://console.local"])
        resp = client.options(
            "/v1/geolocate",
            headers={
                "Origin": "http://console.local",
                "Access-Control-Request-Method": "POST",
            },
        )
        assert resp.headers.get("access-control-allow-origin") == "http://console.local"


class TestConfigFile:
    def test_load_service_config(self, tmp_path, gallery):
        path = tmp_path / "svc.json"
        path.write_text(
            json.dumps(
                {
                    "gallery": gallery.path,
                    "port": 9000,
                    "k_pos": 8,
                    "providers": {
                        "gpt": {
                            "kind": "remote-chat",
                            "endpoint": "https://example.invalid/v1/chat/completions",
                            "model": "gpt-4o",
                            "credential_env": "OPENAI_API_KEY",
                        }
                    },
                }
            )
        )
        cfg = load_service_config(path)
        assert cfg.port == 9000
        assert cfg.default_k_pos == 8
        assert cfg.providers["gpt"].model == "gpt-4o"
        assert cfg.body_limit_bytes == 20 * 1024 * 1024
        client = TestClient(create_app(cfg))
        assert client.get("/v1/index/stats").json()["count"] == 10

    def test_missing_gallery_key_rejected(self, tmp_path):
        path = tmp_path / "svc.json"
        path.write_text("{}")
        from georag.service import ServiceError

        with pytest.raises(ServiceError, match="gallery"):
            load_service_config(path)

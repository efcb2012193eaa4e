import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np
import pytest

from georag.gallery import EmbeddingRecord, build_gallery, open_gallery
from georag.geodesy import GeoCoordinate


def unit_rows(n: int, dim: int, seed: int) -> np.ndarray:
    """Seeded random unit vectors, float64."""
    rng = np.random.default_rng(seed)
    vecs = rng.standard_normal((n, dim))
    return vecs / np.linalg.norm(vecs, axis=1, keepdims=True)


def make_gallery(tmp_path, vectors, coords=None, ids=None, name="gallery.bin"):
    """Build a gallery file from row vectors and open it."""
    vectors = np.asarray(vectors, dtype=np.float64)
    n = vectors.shape[0]
    if coords is None:
        coords = [(float(i % 80), float((i * 7) % 360 - 179)) for i in range(n)]
    if ids is None:
        ids = list(range(n))
    records = [
        EmbeddingRecord(id=ids[i], vector=vectors[i], location=GeoCoordinate(*coords[i]))
        for i in range(n)
    ]
    path = tmp_path / name
    build_gallery(records, vectors.shape[1], path)
    return open_gallery(path)


class StubChat:
    """Scriptable chat-completions stub server.

    Each script entry is (status, payload); payload may be a plain string
    (wrapped as a well-formed chat reply), a dict (sent as-is), or None.
    When the script runs out, the last entry repeats. Requests are
    recorded for assertions.
    """

    def __init__(self, script):
        self.script = list(script)
        self.requests = []
        self._lock = threading.Lock()
        self._calls = 0
        self.in_flight = 0
        self.max_in_flight = 0

        stub = self

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self):
                with stub._lock:
                    stub.in_flight += 1
                    stub.max_in_flight = max(stub.max_in_flight, stub.in_flight)
                    idx = min(stub._calls, len(stub.script) - 1)
                    stub._calls += 1
                length = int(self.headers.get("Content-Length", 0))
                body = self.rfile.read(length)
                try:
                    parsed = json.loads(body)
                except ValueError:
                    parsed = body
                stub.requests.append({"headers": dict(self.headers), "body": parsed})

                status, payload = stub.script[idx]
                if isinstance(payload, str):
                    payload = {"choices": [{"message": {"content": payload}}]}
                data = json.dumps(payload or {}).encode()
                # drop the in-flight count before replying: the client frees
                # its concurrency slot the moment the response lands
                with stub._lock:
                    stub.in_flight -= 1
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(data)))
                self.end_headers()
                self.wfile.write(data)

            def log_message(self, *args):
                pass

        self._server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()

    @property
    def url(self) -> str:
        host, port = self._server.server_address
        return f"http://{host}:{port}/v1/chat/completions"

    @property
    def calls(self) -> int:
        return self._calls

    def close(self):
        self._server.shutdown()
        self._server.server_close()


@pytest.fixture
def stub_chat():
    servers = []

    def start(script):
        server = StubChat(script)
        servers.append(server)
        return server

    yield start
    for server in servers:
        server.close()

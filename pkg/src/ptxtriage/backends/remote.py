"""HTTP inference: client for POST /v1/infer plus a small reference server.

The server half wraps any in-process backend so integration tests and demos
can exercise the exact wire contract; production deployments put trained
models behind the same endpoint.
"""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np
import requests

from ..imaging import ImageGray
from .protocol import (
    ENCODING,
    MODEL_IDS,
    Backend,
    BackendUnavailable,
    ModelUnknown,
    ProtocolError,
    decode_f32,
    encode_f32,
    make_request,
)

DEFAULT_TIMEOUT = 30.0
DEFAULT_MAX_INFLIGHT = 4


class RemoteBackend(Backend):
    """Client for a remote model server speaking the /v1/infer protocol.

    Safe for concurrent use: a semaphore bounds in-flight requests and each
    request carries a timeout. HTTP statuses map onto the backend errors
    (400 -> ModelUnknown, 422 -> ProtocolError, 5xx/unreachable ->
    BackendUnavailable).
    """

    def __init__(
        self,
        base_url: str,
        timeout: float = DEFAULT_TIMEOUT,
        max_inflight: int = DEFAULT_MAX_INFLIGHT,
    ):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self._slots = threading.Semaphore(max_inflight)
        self._session = requests.Session()

    def infer(self, model: str, image: ImageGray, study_id: str | None = None) -> np.ndarray:
        body = make_request(model, image)
        with self._slots:
            try:
                resp = self._session.post(
                    f"{self.base_url}/v1/infer", json=body, timeout=self.timeout
                )
            except requests.RequestException as exc:
                raise BackendUnavailable(f"{self.base_url}: {exc}") from exc
        if resp.status_code == 400:
            raise ModelUnknown(f"server rejected model {model!r}: {resp.text[:200]}")
        if resp.status_code == 422:
            raise ProtocolError(f"server rejected request for {model!r}: {resp.text[:200]}")
        if resp.status_code >= 500:
            raise BackendUnavailable(f"server error {resp.status_code} for {model!r}")
        if resp.status_code != 200:
            raise ProtocolError(f"unexpected status {resp.status_code} for {model!r}")
        try:
            payload = resp.json()
        except ValueError as exc:
            raise ProtocolError(f"response is not JSON: {exc}") from None
        return _parse_response(payload, model)


def _parse_response(payload: dict, model: str) -> np.ndarray:
    if not isinstance(payload, dict):
        raise ProtocolError(f"{model}: response body must be a JSON object")
    if payload.get("encoding") != ENCODING:
        raise ProtocolError(f"{model}: unsupported encoding {payload.get('encoding')!r}")
    shape = payload.get("shape")
    if not isinstance(shape, list) or not all(isinstance(d, int) and d > 0 for d in shape):
        raise ProtocolError(f"{model}: bad shape field {shape!r}")
    values = decode_f32(payload.get("data", ""))
    expected = int(np.prod(shape))
    if values.size != expected:
        raise ProtocolError(f"{model}: payload carries {values.size} values, shape needs {expected}")
    return values.reshape(shape)


class _InferHandler(BaseHTTPRequestHandler):
    backend: Backend  # injected by serve_inference

    # silence per-request logging; tests spin many servers
    def log_message(self, fmt, *args):
        pass

    def _send(self, status: int, body: dict) -> None:
        data = json.dumps(body).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def do_POST(self):
        if self.path != "/v1/infer":
            self._send(404, {"error": "not found"})
            return
        try:
            length = int(self.headers.get("Content-Length", 0))
            req = json.loads(self.rfile.read(length))
            model = req.get("model")
            if model not in MODEL_IDS:
                self._send(400, {"error": f"unknown model {model!r}"})
                return
            shape = req.get("shape")
            if req.get("encoding") != ENCODING or not isinstance(shape, list) or len(shape) != 2:
                self._send(422, {"error": "bad encoding or shape"})
                return
            values = decode_f32(req.get("data", ""))
            if values.size != int(np.prod(shape)):
                self._send(422, {"error": "payload length does not match shape"})
                return
            image = ImageGray(np.clip(values.reshape(shape), 0.0, 1.0))
            out = np.asarray(self.backend.infer(model, image), dtype=np.float64)
            self._send(200, {"shape": list(out.shape), "encoding": ENCODING, "data": encode_f32(out)})
        except ProtocolError as exc:
            self._send(422, {"error": str(exc)})
        except Exception as exc:  # noqa: BLE001 - surface as a 500 per protocol
            self._send(500, {"error": str(exc)})


def serve_inference(backend: Backend, host: str = "127.0.0.1", port: int = 0) -> ThreadingHTTPServer:
    """Start a threaded /v1/infer server wrapping `backend`; caller shuts down.

    Returns the listening server (port 0 picks a free port; read it back via
    `server.server_address`). Serving runs on a daemon thread.
    """
    handler = type("BoundInferHandler", (_InferHandler,), {"backend": backend})
    server = ThreadingHTTPServer((host, port), handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return server

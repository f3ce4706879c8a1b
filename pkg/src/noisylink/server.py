"""Minimal HTTP endpoint over a shared bundle handle.

POST /v1/link with {"text": "..."} returns {"links": [...]}; GET
/v1/health answers 200. Requests share one read-only bundle, so the
threading server needs no extra synchronization beyond the store's own.
"""

from __future__ import annotations

import json
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .corpus import LinkPrediction
from .pipeline import BundleHandle, link_passage

MAX_BODY_BYTES = 1 << 20


def prediction_to_dict(prediction: LinkPrediction) -> dict:
    return {
        "surface": prediction.surface_form.phrase_key,
        "start": prediction.surface_form.start,
        "end": prediction.surface_form.end,
        "entity": prediction.entity.value if prediction.entity else None,
        "score": prediction.score,
        "abstained": prediction.abstained,
    }


def make_server(
    bundle: BundleHandle, port: int, max_body: int = MAX_BODY_BYTES
) -> ThreadingHTTPServer:
    """Build (but do not start) the threading HTTP server."""

    class Handler(BaseHTTPRequestHandler):
        def log_message(self, format, *args):  # noqa: A002 - stdlib signature
            pass

        def _reply(self, status: int, payload: dict) -> None:
            body = json.dumps(payload).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def do_GET(self):
            if self.path == "/v1/health":
                self._reply(200, {"status": "ok"})
            else:
                self._reply(404, {"error": "not found"})

        def do_POST(self):
            if self.path != "/v1/link":
                self._reply(404, {"error": "not found"})
                return
            length = int(self.headers.get("Content-Length", 0))
            if length > max_body:
                self._reply(413, {"error": f"body exceeds {max_body} bytes"})
                return
            raw = self.rfile.read(length)
            try:
                payload = json.loads(raw)
                text = payload["text"]
                if not isinstance(text, str):
                    raise TypeError("text must be a string")
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                self._reply(400, {"error": f"malformed request: {exc}"})
                return
            predictions = link_passage(text, bundle)
            self._reply(200, {"links": [prediction_to_dict(p) for p in predictions]})

    return ThreadingHTTPServer(("127.0.0.1", port), Handler)


def serve(bundle: BundleHandle, port: int) -> None:
    """Serve requests until interrupted."""
    server = make_server(bundle, port)
    try:
        server.serve_forever()
    finally:
        server.server_close()

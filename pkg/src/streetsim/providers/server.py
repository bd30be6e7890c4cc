"""Reference provider server for the HTTP contract.

Backs each endpoint with an in-process provider (oracle ones by default) so
the external code path can be exercised end to end without a model.
"""
from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Any, Callable, Mapping, Optional, Sequence

from ..geo import Pose
from ..perception.camera import render_view
from ..perception.providers import (Detector, ImageScorer, Matcher, ObjectProposal, OracleDetector,
                                    OracleMatcher, StorefrontScorer)
from ..world import World


class FirstOptionChooser:
    def choose(self, options: Sequence[str], context: Mapping[str, Any]) -> tuple[int, str]:
        return 0, "first option"


class MockProviderServer:
    """Threaded HTTP server; use as a context manager or call start()/stop()."""

    def __init__(self, world: World, detector: Optional[Detector] = None,
                 matcher: Optional[Matcher] = None, chooser=None,
                 scorer: Optional[ImageScorer] = None, host: str = "127.0.0.1", port: int = 0,
                 required_token: Optional[str] = None):
        self.world = world
        self.detector = detector or OracleDetector()
        self.matcher = matcher or OracleMatcher()
        self.chooser = chooser or FirstOptionChooser()
        self.scorer = scorer or StorefrontScorer()
        self.required_token = required_token
        self.requests: list[tuple[str, dict]] = []
        # hook for tests: route -> callable(payload) returning (status, body) or None
        self.overrides: dict[str, Callable[[dict], Optional[tuple[int, Any]]]] = {}
        self._httpd = ThreadingHTTPServer((host, port), self._handler_class())
        self._thread: Optional[threading.Thread] = None

    @property
    def url(self) -> str:
        host, port = self._httpd.server_address[:2]
        return f"http://{host}:{port}"

    def start(self) -> "MockProviderServer":
        self._thread = threading.Thread(target=self._httpd.serve_forever, daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        self._httpd.shutdown()
        self._httpd.server_close()

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc):
        self.stop()

    def handle(self, route: str, payload: dict) -> tuple[int, Any]:
        self.requests.append((route, payload))
        override = self.overrides.get(route)
        if override is not None:
            result = override(payload)
            if result is not None:
                return result
        if route == "detect":
            v = payload["view"]
            p = v["pose"]
            view = render_view(self.world, v["node_id"], Pose(p["heading"], p.get("pitch", 0.0), p["fov"]))
            props = self.detector.detect(view, payload["categories"])
            return 200, {"proposals": [{"bbox": q.bbox.as_list(), "label": q.label, "score": q.score}
                                       for q in props]}
        if route == "match":
            same, score = self.matcher.match(ObjectProposal.from_document(payload["a"]),
                                             ObjectProposal.from_document(payload["b"]))
            return 200, {"match": bool(same), "score": float(score)}
        if route == "choose":
            index, why = self.chooser.choose(payload["options"], payload["context"])
            return 200, {"index": index, "rationale": why}
        if route == "score":
            return 200, {"score": float(self.scorer.score(payload["image_ref"]))}
        return 404, {"error": f"unknown route {route}"}

    def _handler_class(self):
        server = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, *args):
                pass

            def do_POST(self):
                if server.required_token and \
                        self.headers.get("Authorization") != f"Bearer {server.required_token}":
                    return self._reply(401, {"error": "unauthorized"})
                length = int(self.headers.get("Content-Length", 0))
                try:
                    payload = json.loads(self.rfile.read(length) or b"{}")
                    status, body = server.handle(self.path.strip("/"), payload)
                except Exception as exc:  # surfaced to the client as a 500
                    status, body = 500, {"error": str(exc)}
                self._reply(status, body)

            def _reply(self, status, body):
                data = body if isinstance(body, bytes) else json.dumps(body).encode("utf-8")
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(data)))
                self.end_headers()
                try:
                    self.wfile.write(data)
                except (BrokenPipeError, ConnectionResetError):
                    pass  # client gave up (timeout)

        return Handler

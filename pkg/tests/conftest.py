from __future__ import annotations

import json
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from harf.alphabet import GeminateMode, PhonemeAlphabet


@pytest.fixture
def small_alphabet() -> PhonemeAlphabet:
    return PhonemeAlphabet(
        inventory=frozenset({"a", "b", "k", "t", "i"}),
        positional_suffixes=("_i", "_B", "_E"),
        silence_tokens=frozenset({"SIL", "sp"}),
        geminate_mode=GeminateMode.EXPAND,
        geminate_marker="GEM",
        oov_map={"q": "k", "p": "b"},
    )


class StubService:
    """Tiny JSON-over-HTTP server driven by a Python callable.

    ``handler(payload, headers)`` returns ``(status, body)``; returning the
    string "sleep" makes the server stall past any sane client timeout.
    """

    def __init__(self, handler):
        self.handler = handler
        self.requests: list[dict] = []
        stub = self

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self):
                length = int(self.headers.get("Content-Length", 0))
                payload = json.loads(self.rfile.read(length) or b"null")
                stub.requests.append({"payload": payload, "headers": dict(self.headers)})
                result = stub.handler(payload, dict(self.headers))
                if result == "sleep":
                    time.sleep(0.5)
                    return
                status, body = result
                raw = body if isinstance(body, bytes) else json.dumps(body).encode()
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(raw)))
                self.end_headers()
                self.wfile.write(raw)

            def log_message(self, *args):
                pass

        self.server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self.thread = threading.Thread(target=self.server.serve_forever, daemon=True)
        self.thread.start()

    @property
    def url(self) -> str:
        host, port = self.server.server_address[:2]
        return f"http://{host}:{port}/"

    def close(self):
        self.server.shutdown()
        self.server.server_close()


@pytest.fixture
def stub_service():
    services = []

    def make(handler):
        svc = StubService(handler)
        services.append(svc)
        return svc

    yield make
    for svc in services:
        svc.close()


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)

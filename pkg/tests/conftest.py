import json
import threading
import time
from collections import deque
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from uavnav import kernels


@pytest.fixture(scope="session", autouse=True)
def _warm_kernels():
    # JIT compile once so individual tests (and wall-clock assertions) are not
    # charged for compilation.
    kernels.warmup()


class MockVlmServer:
    """Scripted chat-completions endpoint with fault injection.

    Queue response specs onto .responses before the client calls:
      {"content": "..."}            -> 200, wraps content in a chat completion
      {"raw_body": "..."}           -> 200, body sent verbatim (protocol fault)
      {"status": 500}               -> HTTP error
      {"delay_s": 1.0, ...}         -> sleep before answering (timeout fault)
    Every received request payload is appended to .requests.
    """

    def __init__(self):
        self.responses = deque()
        self.requests = []
        owner = self

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self):
                length = int(self.headers.get("Content-Length", 0))
                try:
                    owner.requests.append(json.loads(self.rfile.read(length)))
                except json.JSONDecodeError:
                    owner.requests.append(None)
                spec = owner.responses.popleft() if owner.responses else {"status": 500}
                try:
                    if "delay_s" in spec:
                        time.sleep(spec["delay_s"])
                    status = spec.get("status", 200)
                    if "raw_body" in spec:
                        body = spec["raw_body"].encode()
                    elif status == 200:
                        body = json.dumps({"choices": [{"message": {
                            "content": spec.get("content", "")}}]}).encode()
                    else:
                        body = b'{"error": "injected"}'
                    self.send_response(status)
                    self.send_header("Content-Type", "application/json")
                    self.send_header("Content-Length", str(len(body)))
                    self.end_headers()
                    self.wfile.write(body)
                except (BrokenPipeError, ConnectionResetError):
                    pass  # client gave up (timeout fault): fine

            def log_message(self, *args):
                pass

        self._server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()

    @property
    def url(self) -> str:
        host, port = self._server.server_address
        return f"http://{host}:{port}/v1/chat/completions"

    def close(self):
        self._server.shutdown()
        self._server.server_close()


@pytest.fixture
def mock_vlm():
    server = MockVlmServer()
    yield server
    server.close()

"""Shared fixtures: a stub HTTP model server speaking the top-k wire protocol."""

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

STUB_VOCAB = ["a;\n", "b;\n", "// x\n", "endmodule"]


class _StubHandler(BaseHTTPRequestHandler):
    def log_message(self, *args):  # keep test output clean
        pass

    def _send(self, code, payload):
        body = json.dumps(payload).encode("utf-8")
        self.send_response(code)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_GET(self):
        if self.path == "/healthz":
            self._send(200, {"status": "ok"})
        elif self.path == "/v1/vocab":
            self._send(
                200,
                {
                    "tokens": [{"id": i, "text": t} for i, t in enumerate(STUB_VOCAB)],
                    "eos_texts": ["endmodule"],
                },
            )
        else:
            self._send(404, {"error": "not found"})

    def do_POST(self):
        if self.path != "/v1/topk":
            self._send(404, {"error": "not found"})
            return
        length = int(self.headers.get("Content-Length", 0))
        request = json.loads(self.rfile.read(length))
        state = self.server.state
        state["requests"].append(request)
        if state.get("fail_next", 0) > 0:
            state["fail_next"] -= 1
            self._send(500, {"error": "injected failure"})
            return
        # Short sequences favor statements, longer ones the terminal token.
        if len(request["generated_token_ids"]) < 2:
            probs = [0.5, 0.3, 0.15, 0.05]
        else:
            probs = [0.04, 0.03, 0.03, 0.9]
        ranked = sorted(enumerate(probs), key=lambda ip: (-ip[1], ip[0]))
        k = int(request["k"])
        self._send(
            200,
            {
                "candidates": [
                    {"id": i, "text": STUB_VOCAB[i], "prob": p} for i, p in ranked[:k]
                ]
            },
        )


class StubServer:
    vocab = tuple(STUB_VOCAB)

    def __init__(self):
        self.httpd = ThreadingHTTPServer(("127.0.0.1", 0), _StubHandler)
        self.httpd.state = {"requests": [], "fail_next": 0}
        self.thread = threading.Thread(target=self.httpd.serve_forever, daemon=True)
        self.thread.start()

    @property
    def url(self) -> str:
        return f"http://127.0.0.1:{self.httpd.server_address[1]}"

    @property
    def state(self) -> dict:
        return self.httpd.state

    def stop(self):
        self.httpd.shutdown()
        self.httpd.server_close()


@pytest.fixture
def stub_server():
    server = StubServer()
    yield server
    server.stop()

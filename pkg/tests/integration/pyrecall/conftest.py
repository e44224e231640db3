import http.server
import threading
from typing import Dict, Iterator, List, Tuple

import pytest

# path -> (status, body)
Routes = Dict[str, Tuple[int, str]]


class _Handler(http.server.BaseHTTPRequestHandler):
    routes: Routes = {}
    requests: List[Tuple[str, str, bytes]] = []

    def _reply(self, body: bytes) -> None:
        path = self.path.split('?', 1)[0]
        self.requests.append((self.command, self.path, body))
        status, text = self.routes.get(path, (404, 'not found'))
        payload = text.encode('utf-8')
        self.send_response(status)
        self.send_header('Content-Type', 'text/plain; charset=utf-8')
        self.send_header('Content-Length', str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    def do_GET(self) -> None:  # pylint: disable=invalid-name
        self._reply(b'')

    def do_POST(self) -> None:  # pylint: disable=invalid-name
        length = int(self.headers.get('Content-Length', 0))
        self._reply(self.rfile.read(length))

    def log_message(self, format: str, *args: object) -> None:  # pylint: disable=redefined-builtin
        pass


class LocalServer:
    def __init__(self, server: http.server.HTTPServer, handler: type) -> None:
        self.server = server
        self.handler = handler

    @property
    def base_url(self) -> str:
        host, port = self.server.server_address[:2]
        return f"http://{host}:{port}"

    def route(self, path: str, body: str, status: int = 200) -> str:
        self.handler.routes[path] = (status, body)
        return f"{self.base_url}{path}"

    @property
    def requests(self) -> List[Tuple[str, str, bytes]]:
        return self.handler.requests


@pytest.fixture(name='local_server')
def _local_server() -> Iterator[LocalServer]:
    handler = type('Handler', (_Handler,), {'routes': {}, 'requests': []})
    server = http.server.ThreadingHTTPServer(('127.0.0.1', 0), handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        yield LocalServer(server, handler)
    finally:
        server.shutdown()
        server.server_close()

"""Raw-socket and websocket servers speaking the framed protocol.

Both transports share one Device and one codec; a websocket carries
exactly one frame per binary message. An optional static HTTP server
hosts the browser IDE files next to the websocket endpoint.
"""

import http.server
import socketserver
import threading

from websockets.sync.server import serve as ws_serve

from .device import Device
from .wire import StreamDecoder

DEFAULT_PORT = 3370
DEFAULT_WS_PORT = 3371


class _RawServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True


class _RawHandler(socketserver.BaseRequestHandler):
    def handle(self):
        device = self.server.device
        sock = self.request
        lock = threading.Lock()

        def send(data):
            with lock:
                sock.sendall(data)

        decoder = StreamDecoder()
        device.subscribe(send)
        try:
            while True:
                data = sock.recv(65536)
                if not data:
                    break
                for frame in decoder.feed(data):
                    send(device.handle_request(frame))
        except OSError:
            pass
        finally:
            device.unsubscribe(send)


def _ws_handler(device):
    def handler(conn):
        lock = threading.Lock()

        def send(data):
            with lock:
                conn.send(data)

        decoder = StreamDecoder()
        device.subscribe(send)
        try:
            for message in conn:
                if isinstance(message, str):
                    continue
                for frame in decoder.feed(message):
                    send(device.handle_request(frame))
        finally:
            device.unsubscribe(send)

    return handler


class ServerHandle:
    """Running transports plus their shared device; close() stops all."""

    def __init__(self, device, tcp, ws, httpd=None):
        self.device = device
        self.tcp = tcp
        self.ws = ws
        self.httpd = httpd
        self.threads = []

    def start(self):
        for name, target in (("devserve-tcp", self.tcp.serve_forever),
                             ("devserve-ws", self.ws.serve_forever)):
            thread = threading.Thread(target=target, name=name, daemon=True)
            thread.start()
            self.threads.append(thread)
        if self.httpd is not None:
            thread = threading.Thread(target=self.httpd.serve_forever,
                                      name="devserve-http", daemon=True)
            thread.start()
            self.threads.append(thread)
        return self

    @property
    def tcp_address(self):
        return self.tcp.server_address[:2]

    @property
    def ws_address(self):
        return self.ws.socket.getsockname()[:2]

    @property
    def http_address(self):
        return None if self.httpd is None else self.httpd.server_address[:2]

    def close(self):
        self.tcp.shutdown()
        self.tcp.server_close()
        self.ws.shutdown()
        if self.httpd is not None:
            self.httpd.shutdown()
            self.httpd.server_close()
        for thread in self.threads:
            thread.join(timeout=5)


def serve(device=None, host="127.0.0.1", port=DEFAULT_PORT,
          ws_port=DEFAULT_WS_PORT, http_port=None, http_dir=None):
    """Bind both transports (and the optional static HTTP server) and
    start serving; returns a ServerHandle. Raises OSError if a port is
    taken. Port 0 picks a free port."""
    if device is None:
        device = Device()
    tcp = _RawServer((host, port), _RawHandler)
    tcp.device = device
    try:
        ws = ws_serve(_ws_handler(device), host, ws_port)
    except OSError:
        tcp.server_close()
        raise
    httpd = None
    if http_port is not None:
        def handler(*args, **kwargs):
            return http.server.SimpleHTTPRequestHandler(
                *args, directory=http_dir, **kwargs)
        try:
            httpd = http.server.ThreadingHTTPServer((host, http_port),
                                                    handler)
        except OSError:
            tcp.server_close()
            ws.shutdown()
            raise
    return ServerHandle(device, tcp, ws, httpd).start()

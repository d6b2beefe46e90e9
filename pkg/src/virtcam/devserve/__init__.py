"""Device runtime and framed control protocol server."""

from .device import Device, PublishedFrame, format_source_spec, parse_source_spec
from .server import DEFAULT_PORT, DEFAULT_WS_PORT, ServerHandle, serve
from .wire import (ACK, ATTR_GET, ATTR_SET, ERROR, FB_FRAME, FB_REQUEST,
                   PRINT, SCRIPT_DONE, SCRIPT_EXEC, SCRIPT_STOP,
                   SCRIPT_UPLOAD, Frame, StreamDecoder, decode_frame,
                   encode_frame)

__all__ = [
    "Device", "PublishedFrame", "format_source_spec", "parse_source_spec",
    "DEFAULT_PORT", "DEFAULT_WS_PORT", "ServerHandle", "serve",
    "ACK", "ATTR_GET", "ATTR_SET", "ERROR", "FB_FRAME", "FB_REQUEST",
    "PRINT", "SCRIPT_DONE", "SCRIPT_EXEC", "SCRIPT_STOP", "SCRIPT_UPLOAD",
    "Frame", "StreamDecoder", "decode_frame", "encode_frame",
]

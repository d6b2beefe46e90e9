"""Framed control protocol: encoding, decoding, and stream resync.

Layout: 2-byte magic "MV", type byte, u32 LE payload length, payload,
u32 LE CRC-32 (IEEE, reflected, init/final 0xFFFFFFFF) computed over
type + length + payload. Same bytes over raw sockets and websocket
binary messages.
"""

import struct
import zlib

from ..errors import CrcMismatch, NeedMoreData, Oversize

MAGIC = b"MV"
MAX_PAYLOAD = 16 * 1024 * 1024
_HEADER = struct.Struct("<2sBI")
_CRC = struct.Struct("<I")

# Requests.
SCRIPT_UPLOAD = 0x01
SCRIPT_EXEC = 0x02
SCRIPT_STOP = 0x03
FB_REQUEST = 0x04
ATTR_GET = 0x05
ATTR_SET = 0x06

# Responses and events.
ACK = 0x80
FB_FRAME = 0x84
PRINT = 0x85
SCRIPT_DONE = 0x86
ERROR = 0xFF

# ERROR payload codes.
E_BAD_REQUEST = 0x01
E_SCRIPT_RUNNING = 0x02
E_NO_FRAME = 0x03
E_ATTR_UNKNOWN = 0x04
E_SCRIPT_ERROR = 0x05

# SCRIPT_DONE status byte.
DONE_OK = 0
DONE_ERROR = 1
DONE_STOPPED = 2
DONE_STEPLIMIT = 3
DONE_STATUS = {"ok": DONE_OK, "error": DONE_ERROR,
               "stopped": DONE_STOPPED, "steplimit": DONE_STEPLIMIT}

# FB_FRAME format byte.
FORMAT_CODES = {"GRAYSCALE8": 1, "RGB565": 2}


class Frame:
    __slots__ = ("type", "payload")

    def __init__(self, type, payload=b""):
        self.type = type
        self.payload = payload

    def __eq__(self, other):
        return isinstance(other, Frame) and self.type == other.type \
            and self.payload == other.payload

    def __repr__(self):
        return "Frame(0x%02X, %d bytes)" % (self.type, len(self.payload))


def encode_frame(ftype, payload=b""):
    if len(payload) > MAX_PAYLOAD:
        raise Oversize("payload of %d bytes over the 16 MiB bound"
                       % len(payload))
    body = _HEADER.pack(MAGIC, ftype, len(payload))[2:] + payload
    return MAGIC + body + _CRC.pack(zlib.crc32(body))


def decode_frame(data):
    """Decode one frame from the head of data -> (Frame, consumed).

    Raises NeedMoreData when data holds no complete frame yet,
    CrcMismatch when the checksum fails (consumed attribute says how far
    to skip before rescanning), Oversize for an absurd length field.
    """
    if len(data) < _HEADER.size:
        raise NeedMoreData("need %d header bytes" % _HEADER.size)
    magic, ftype, length = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise CrcMismatch("bad magic")
    if length > MAX_PAYLOAD:
        raise Oversize("length field %d over the 16 MiB bound" % length)
    total = _HEADER.size + length + _CRC.size
    if len(data) < total:
        raise NeedMoreData("need %d bytes" % total)
    body = bytes(data[2:_HEADER.size + length])
    stored = _CRC.unpack_from(data, _HEADER.size + length)[0]
    if zlib.crc32(body) != stored:
        exc = CrcMismatch("checksum failed on type 0x%02X" % ftype)
        exc.consumed = 2  # skip the magic, rescan from the next byte
        raise exc
    return Frame(ftype, body[_HEADER.size - 2:]), total


class StreamDecoder:
    """Incremental decoder that resynchronizes on corrupted input."""

    def __init__(self):
        self.buf = bytearray()
        self.crc_failures = 0

    def feed(self, data):
        """Append bytes; return every complete frame now available."""
        self.buf.extend(data)
        frames = []
        while True:
            idx = self.buf.find(MAGIC)
            if idx < 0:
                # Keep a trailing 'M' that might start the next magic.
                keep = 1 if self.buf[-1:] == MAGIC[:1] else 0
                del self.buf[:len(self.buf) - keep]
                return frames
            if idx:
                del self.buf[:idx]
            try:
                frame, consumed = decode_frame(self.buf)
            except NeedMoreData:
                return frames
            except CrcMismatch:
                self.crc_failures += 1
                del self.buf[:2]
                continue
            except Oversize:
                self.crc_failures += 1
                del self.buf[:2]
                continue
            frames.append(frame)
            del self.buf[:consumed]


def error_frame(code, message):
    return encode_frame(ERROR, bytes([code]) + message.encode("utf-8"))


def done_frame(status, steps):
    return encode_frame(SCRIPT_DONE,
                        struct.pack("<BQ", DONE_STATUS[status], steps))


def fb_frame(width, height, format_name, jpeg):
    head = struct.pack("<HHB", width, height, FORMAT_CODES[format_name])
    return encode_frame(FB_FRAME, head + jpeg)

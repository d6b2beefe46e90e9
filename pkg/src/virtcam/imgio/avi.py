"""Motion-JPEG AVI writer.

Builds a single-stream RIFF/AVI file: one 'vids' stream with MJPG
compression, one '00dc' chunk per frame (each a complete baseline JPEG),
and a standard idx1 index so seek-based players work.
"""

import struct

from ..errors import DimensionMismatch
from .jpeg import encode_jpeg

_AVIF_HASINDEX = 0x00000010
_AVIIF_KEYFRAME = 0x00000010


def _chunk(fourcc, payload):
    data = struct.pack("<4sI", fourcc, len(payload)) + payload
    if len(payload) & 1:
        data += b"\x00"
    return data


def _list(list_type, payload):
    return _chunk(b"LIST", list_type + payload)


class MjpegWriter:
    """Accumulates JPEG frames and renders the complete AVI on end()."""

    def __init__(self, width, height, fps=30, quality=90):
        self.width = width
        self.height = height
        self.fps = max(1, int(fps))
        self.quality = quality
        self.jpegs = []

    def add_frame(self, img):
        if img.width != self.width or img.height != self.height:
            raise DimensionMismatch("frame size differs from the AVI size")
        self.jpegs.append(encode_jpeg(img, self.quality))

    def end(self):
        nframes = len(self.jpegs)
        max_jpeg = max((len(j) for j in self.jpegs), default=0)
        buf_size = (max_jpeg + 1) & ~1

        avih = struct.pack(
            "<IIIIIIIIIIIIII",
            1_000_000 // self.fps,        # microseconds per frame
            buf_size * self.fps,          # rough max byte rate
            0,                            # padding granularity
            _AVIF_HASINDEX,
            nframes,
            0,                            # initial frames
            1,                            # stream count
            buf_size,
            self.width,
            self.height,
            0, 0, 0, 0,
        )
        strh = struct.pack(
            "<4s4sIHHIIIIIIIi4H",
            b"vids",
            b"MJPG",
            0, 0, 0,                      # flags, priority, language
            0,                            # initial frames
            1,                            # scale
            self.fps,                     # rate (fps = rate/scale)
            0,                            # start
            nframes,
            buf_size,
            0xFFFFFFFF,                   # quality: driver default
            0,                            # sample size (0 = varying)
            0, 0, self.width, self.height,
        )
        strf = struct.pack(
            "<IiiHH4sIiiII",
            40,
            self.width,
            self.height,
            1,                            # planes
            24,
            b"MJPG",
            self.width * self.height * 3,
            0, 0, 0, 0,
        )
        hdrl = _list(
            b"hdrl",
            _chunk(b"avih", avih)
            + _list(b"strl", _chunk(b"strh", strh) + _chunk(b"strf", strf)),
        )

        movi_payload = bytearray()
        index = []
        for jpeg in self.jpegs:
            # offset counted from the 'movi' fourcc to the chunk header
            index.append((4 + len(movi_payload), len(jpeg)))
            movi_payload += _chunk(b"00dc", jpeg)
        movi = _list(b"movi", bytes(movi_payload))

        idx1 = bytearray()
        for offset, size in index:
            idx1 += struct.pack("<4sIII", b"00dc", _AVIIF_KEYFRAME, offset, size)

        body = b"AVI " + hdrl + movi + _chunk(b"idx1", bytes(idx1))
        return struct.pack("<4sI", b"RIFF", len(body)) + body

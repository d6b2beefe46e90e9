"""PGM/PPM (netpbm) readers and binary writers.

Reads P2/P5 grayscale and P3/P6 color at maxval <= 255; writes the binary
variants P5/P6. Color pixels are packed to RGB565 by 5-6-5 truncation on
read and expanded by bit replication on write, so the RGB565 domain
round-trips exactly.
"""

import numpy as np

from ..errors import MalformedHeader, TruncatedData, UnsupportedFormat, WrongFormat
from ..imgproc import expand565, pack565_from_rgb8
from ..membuf import Image, PixelFormat


def _tokenize_header(data, count):
    """First `count` whitespace tokens after the magic, skipping # comments.
    Returns (tokens, offset of the byte after the single post-header blank)."""
    tokens = []
    i = 2  # past the 2-byte magic
    n = len(data)
    while len(tokens) < count:
        while i < n and data[i:i + 1].isspace():
            i += 1
        if i < n and data[i] == ord("#"):
            while i < n and data[i] != ord("\n"):
                i += 1
            continue
        start = i
        while i < n and not data[i:i + 1].isspace():
            i += 1
        if start == i:
            raise MalformedHeader("truncated netpbm header")
        tokens.append(data[start:i])
    if i >= n:
        raise MalformedHeader("missing raster separator")
    return tokens, i + 1


def _parse_dims(tokens):
    try:
        w, h, maxval = (int(t) for t in tokens)
    except ValueError:
        raise MalformedHeader("non-numeric netpbm header field") from None
    if w < 1 or h < 1:
        raise MalformedHeader("bad netpbm dimensions %dx%d" % (w, h))
    if not 0 < maxval <= 255:
        raise UnsupportedFormat("unsupported netpbm maxval %d" % maxval)
    return w, h, maxval


def _ascii_samples(data, offset, count):
    fields = data[offset:].split()
    if len(fields) < count:
        raise TruncatedData("netpbm ascii raster too short")
    try:
        vals = np.array([int(f) for f in fields[:count]], dtype=np.int64)
    except ValueError:
        raise TruncatedData("non-numeric netpbm ascii sample") from None
    return vals


def read_pnm(data, arena):
    magic = bytes(data[:2])
    tokens, offset = _tokenize_header(data, 3)
    w, h, _ = _parse_dims(tokens)
    if magic in (b"P5", b"P2"):
        count = w * h
        if magic == b"P5":
            raw = data[offset:offset + count]
            if len(raw) < count:
                raise TruncatedData("PGM raster too short")
            samples = np.frombuffer(bytes(raw), dtype=np.uint8)
        else:
            samples = _ascii_samples(data, offset, count).astype(np.uint8)
        img = Image(arena, w, h, PixelFormat.GRAYSCALE8)
        img.pixels[:] = samples.reshape(h, w)
        return img
    if magic in (b"P6", b"P3"):
        count = w * h * 3
        if magic == b"P6":
            raw = data[offset:offset + count]
            if len(raw) < count:
                raise TruncatedData("PPM raster too short")
            samples = np.frombuffer(bytes(raw), dtype=np.uint8).astype(np.uint16)
        else:
            samples = _ascii_samples(data, offset, count).astype(np.uint16)
        rgb = samples.reshape(h, w, 3)
        img = Image(arena, w, h, PixelFormat.RGB565)
        img.pixels[:] = pack565_from_rgb8(rgb[:, :, 0], rgb[:, :, 1], rgb[:, :, 2])
        return img
    raise UnsupportedFormat("not a supported netpbm magic: %r" % magic)


def write_pgm(img):
    if img.format is not PixelFormat.GRAYSCALE8:
        raise WrongFormat("PGM output requires GRAYSCALE8")
    header = b"P5\n%d %d\n255\n" % (img.width, img.height)
    return header + img.pixels.tobytes()


def write_ppm(img):
    header = b"P6\n%d %d\n255\n" % (img.width, img.height)
    if img.format is PixelFormat.GRAYSCALE8:
        g = img.pixels
        rgb = np.stack([g, g, g], axis=2)
    else:
        r, g, b = expand565(img.pixels)
        rgb = np.stack([r, g, b], axis=2).astype(np.uint8)
    return header + rgb.astype(np.uint8).tobytes()

"""Windows BMP reader/writer, 24-bit uncompressed bottom-up only."""

import struct

import numpy as np

from ..errors import MalformedHeader, TruncatedData, UnsupportedFormat
from ..imgproc import expand565, pack565_from_rgb8
from ..membuf import Image, PixelFormat

_FILE_HDR = struct.Struct("<2sIHHI")
_INFO_HDR = struct.Struct("<IiiHHIIiiII")


def read_bmp(data, arena):
    if len(data) < _FILE_HDR.size + _INFO_HDR.size:
        raise TruncatedData("BMP shorter than its headers")
    magic, _, _, _, pixel_offset = _FILE_HDR.unpack_from(data, 0)
    if magic != b"BM":
        raise MalformedHeader("not a BMP file")
    (hdr_size, w, h, planes, bpp, compression,
     _, _, _, _, _) = _INFO_HDR.unpack_from(data, _FILE_HDR.size)
    if hdr_size < 40:
        raise UnsupportedFormat("BMP header size %d" % hdr_size)
    if planes != 1 or bpp != 24 or compression != 0:
        raise UnsupportedFormat("only 24-bit uncompressed BMP is supported")
    if h <= 0:
        raise UnsupportedFormat("only bottom-up BMP is supported")
    if w < 1:
        raise MalformedHeader("bad BMP width %d" % w)
    stride = (w * 3 + 3) & ~3
    need = pixel_offset + stride * h
    if len(data) < need:
        raise TruncatedData("BMP raster too short")
    rows = np.frombuffer(bytes(data[pixel_offset:need]), dtype=np.uint8)
    rows = rows.reshape(h, stride)[:, :w * 3].reshape(h, w, 3)
    rows = rows[::-1]  # stored bottom-up
    b = rows[:, :, 0].astype(np.uint16)
    g = rows[:, :, 1].astype(np.uint16)
    r = rows[:, :, 2].astype(np.uint16)
    img = Image(arena, w, h, PixelFormat.RGB565)
    img.pixels[:] = pack565_from_rgb8(r, g, b)
    return img


def write_bmp(img):
    w, h = img.width, img.height
    if img.format is PixelFormat.GRAYSCALE8:
        g8 = img.pixels
        r, g, b = g8, g8, g8
    else:
        r, g, b = expand565(img.pixels)
    bgr = np.stack([b, g, r], axis=2).astype(np.uint8)
    stride = (w * 3 + 3) & ~3
    raster = np.zeros((h, stride), dtype=np.uint8)
    raster[:, :w * 3] = bgr.reshape(h, w * 3)
    raster = raster[::-1]  # bottom-up
    pixel_offset = _FILE_HDR.size + _INFO_HDR.size
    total = pixel_offset + stride * h
    out = bytearray()
    out += _FILE_HDR.pack(b"BM", total, 0, 0, pixel_offset)
    out += _INFO_HDR.pack(40, w, h, 1, 24, 0, stride * h, 2835, 2835, 0, 0)
    out += raster.tobytes()
    return bytes(out)

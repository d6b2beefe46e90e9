"""Baseline JPEG encoder.

Sequential DCT, 8-bit, with the familiar default quantization and Huffman
tables. Grayscale images encode as a single component; color images are
converted to YCbCr and chroma is subsampled 4:2:0. Output carries a JFIF
APP0 segment and is decodable by any baseline decoder.
"""

import struct

import numpy as np

from ..imgproc import expand565
from ..membuf import PixelFormat

QUANT_LUMA = np.array([
    16, 11, 10, 16, 24, 40, 51, 61,
    12, 12, 14, 19, 26, 58, 60, 55,
    14, 13, 16, 24, 40, 57, 69, 56,
    14, 17, 22, 29, 51, 87, 80, 62,
    18, 22, 37, 56, 68, 109, 103, 77,
    24, 35, 55, 64, 81, 104, 113, 92,
    49, 64, 78, 87, 103, 121, 120, 101,
    72, 92, 95, 98, 112, 100, 103, 99,
], dtype=np.int32).reshape(8, 8)

QUANT_CHROMA = np.array([
    17, 18, 24, 47, 99, 99, 99, 99,
    18, 21, 26, 66, 99, 99, 99, 99,
    24, 26, 56, 99, 99, 99, 99, 99,
    47, 66, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99,
], dtype=np.int32).reshape(8, 8)

DC_LUMA_BITS = [0, 1, 5, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0]
DC_LUMA_VALS = list(range(12))
DC_CHROMA_BITS = [0, 3, 1, 1, 1, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0]
DC_CHROMA_VALS = list(range(12))

AC_LUMA_BITS = [0, 2, 1, 3, 3, 2, 4, 3, 5, 5, 4, 4, 0, 0, 1, 0x7D]
AC_LUMA_VALS = [
    0x01, 0x02, 0x03, 0x00, 0x04, 0x11, 0x05, 0x12,
    0x21, 0x31, 0x41, 0x06, 0x13, 0x51, 0x61, 0x07,
    0x22, 0x71, 0x14, 0x32, 0x81, 0x91, 0xA1, 0x08,
    0x23, 0x42, 0xB1, 0xC1, 0x15, 0x52, 0xD1, 0xF0,
    0x24, 0x33, 0x62, 0x72, 0x82, 0x09, 0x0A, 0x16,
    0x17, 0x18, 0x19, 0x1A, 0x25, 0x26, 0x27, 0x28,
    0x29, 0x2A, 0x34, 0x35, 0x36, 0x37, 0x38, 0x39,
    0x3A, 0x43, 0x44, 0x45, 0x46, 0x47, 0x48, 0x49,
    0x4A, 0x53, 0x54, 0x55, 0x56, 0x57, 0x58, 0x59,
    0x5A, 0x63, 0x64, 0x65, 0x66, 0x67, 0x68, 0x69,
    0x6A, 0x73, 0x74, 0x75, 0x76, 0x77, 0x78, 0x79,
    0x7A, 0x83, 0x84, 0x85, 0x86, 0x87, 0x88, 0x89,
    0x8A, 0x92, 0x93, 0x94, 0x95, 0x96, 0x97, 0x98,
    0x99, 0x9A, 0xA2, 0xA3, 0xA4, 0xA5, 0xA6, 0xA7,
    0xA8, 0xA9, 0xAA, 0xB2, 0xB3, 0xB4, 0xB5, 0xB6,
    0xB7, 0xB8, 0xB9, 0xBA, 0xC2, 0xC3, 0xC4, 0xC5,
    0xC6, 0xC7, 0xC8, 0xC9, 0xCA, 0xD2, 0xD3, 0xD4,
    0xD5, 0xD6, 0xD7, 0xD8, 0xD9, 0xDA, 0xE1, 0xE2,
    0xE3, 0xE4, 0xE5, 0xE6, 0xE7, 0xE8, 0xE9, 0xEA,
    0xF1, 0xF2, 0xF3, 0xF4, 0xF5, 0xF6, 0xF7, 0xF8,
    0xF9, 0xFA,
]

AC_CHROMA_BITS = [0, 2, 1, 2, 4, 4, 3, 4, 7, 5, 4, 4, 0, 1, 2, 0x77]
AC_CHROMA_VALS = [
    0x00, 0x01, 0x02, 0x03, 0x11, 0x04, 0x05, 0x21,
    0x31, 0x06, 0x12, 0x41, 0x51, 0x07, 0x61, 0x71,
    0x13, 0x22, 0x32, 0x81, 0x08, 0x14, 0x42, 0x91,
    0xA1, 0xB1, 0xC1, 0x09, 0x23, 0x33, 0x52, 0xF0,
    0x15, 0x62, 0x72, 0xD1, 0x0A, 0x16, 0x24, 0x34,
    0xE1, 0x25, 0xF1, 0x17, 0x18, 0x19, 0x1A, 0x26,
    0x27, 0x28, 0x29, 0x2A, 0x35, 0x36, 0x37, 0x38,
    0x39, 0x3A, 0x43, 0x44, 0x45, 0x46, 0x47, 0x48,
    0x49, 0x4A, 0x53, 0x54, 0x55, 0x56, 0x57, 0x58,
    0x59, 0x5A, 0x63, 0x64, 0x65, 0x66, 0x67, 0x68,
    0x69, 0x6A, 0x73, 0x74, 0x75, 0x76, 0x77, 0x78,
    0x79, 0x7A, 0x82, 0x83, 0x84, 0x85, 0x86, 0x87,
    0x88, 0x89, 0x8A, 0x92, 0x93, 0x94, 0x95, 0x96,
    0x97, 0x98, 0x99, 0x9A, 0xA2, 0xA3, 0xA4, 0xA5,
    0xA6, 0xA7, 0xA8, 0xA9, 0xAA, 0xB2, 0xB3, 0xB4,
    0xB5, 0xB6, 0xB7, 0xB8, 0xB9, 0xBA, 0xC2, 0xC3,
    0xC4, 0xC5, 0xC6, 0xC7, 0xC8, 0xC9, 0xCA, 0xD2,
    0xD3, 0xD4, 0xD5, 0xD6, 0xD7, 0xD8, 0xD9, 0xDA,
    0xE2, 0xE3, 0xE4, 0xE5, 0xE6, 0xE7, 0xE8, 0xE9,
    0xEA, 0xF2, 0xF3, 0xF4, 0xF5, 0xF6, 0xF7, 0xF8,
    0xF9, 0xFA,
]


def _zigzag_order():
    """(row, col) pairs of the 8x8 block in zigzag scan order."""
    order = []
    r = c = 0
    up = True
    for _ in range(64):
        order.append((r, c))
        if up:
            if c == 7:
                r += 1
                up = False
            elif r == 0:
                c += 1
                up = False
            else:
                r -= 1
                c += 1
        else:
            if r == 7:
                c += 1
                up = True
            elif c == 0:
                r += 1
                up = True
            else:
                r += 1
                c -= 1
    return order

ZIGZAG = _zigzag_order()
_ZZ_ROWS = np.array([r for r, _ in ZIGZAG])
_ZZ_COLS = np.array([c for _, c in ZIGZAG])


def scale_quant_table(base, quality):
    """Scale a base table for quality 1..100; entries clamp to 1..255."""
    quality = min(100, max(1, int(quality)))
    if quality < 50:
        scale = 5000 // quality
    else:
        scale = 200 - 2 * quality
    t = (base * scale + 50) // 100
    return np.clip(t, 1, 255).astype(np.int32)


def build_huffman(bits, values):
    """Map value -> (code, length) per the canonical code assignment."""
    table = {}
    code = 0
    k = 0
    for length in range(1, 17):
        for _ in range(bits[length - 1]):
            table[values[k]] = (code, length)
            k += 1
            code += 1
        code <<= 1
    return table

_DC_LUMA = build_huffman(DC_LUMA_BITS, DC_LUMA_VALS)
_AC_LUMA = build_huffman(AC_LUMA_BITS, AC_LUMA_VALS)
_DC_CHROMA = build_huffman(DC_CHROMA_BITS, DC_CHROMA_VALS)
_AC_CHROMA = build_huffman(AC_CHROMA_BITS, AC_CHROMA_VALS)

_DCT_N = np.arange(8)
_DCT_M = np.cos((2 * _DCT_N[None, :] + 1) * _DCT_N[:, None] * np.pi / 16) * 0.5
_DCT_M[0, :] *= 1 / np.sqrt(2)


class BitWriter:
    """MSB-first bit packer with 0xFF byte stuffing."""

    def __init__(self):
        self.out = bytearray()
        self.acc = 0
        self.nbits = 0

    def put(self, code, length):
        self.acc = (self.acc << length) | (code & ((1 << length) - 1))
        self.nbits += length
        while self.nbits >= 8:
            self.nbits -= 8
            byte = (self.acc >> self.nbits) & 0xFF
            self.out.append(byte)
            if byte == 0xFF:
                self.out.append(0x00)
        self.acc &= (1 << self.nbits) - 1

    def flush(self):
        if self.nbits:
            pad = 8 - self.nbits
            self.put((1 << pad) - 1, pad)


def _pad_to_multiple(plane, mult):
    h, w = plane.shape
    ph = (h + mult - 1) // mult * mult
    pw = (w + mult - 1) // mult * mult
    if ph == h and pw == w:
        return plane
    out = np.empty((ph, pw), dtype=plane.dtype)
    out[:h, :w] = plane
    out[h:, :w] = plane[h - 1:h, :]
    out[:h, w:] = plane[:, w - 1:w]
    out[h:, w:] = plane[h - 1, w - 1]
    return out


def _plane_blocks(plane, qtable):
    """Quantized zigzag coefficients for every 8x8 block, raster order."""
    h, w = plane.shape
    shifted = plane.astype(np.float64) - 128.0
    blocks = shifted.reshape(h // 8, 8, w // 8, 8).transpose(0, 2, 1, 3)
    coeffs = np.einsum("ij,abjk,lk->abil", _DCT_M, blocks, _DCT_M)
    q = np.round(coeffs / qtable.astype(np.float64)).astype(np.int32)
    q = q.reshape(-1, 8, 8)
    return q[:, _ZZ_ROWS, _ZZ_COLS]


def _magnitude(value):
    return int(value).bit_length() if value > 0 else int(-value).bit_length()


def _encode_block(bw, zz, prev_dc, dc_table, ac_table):
    diff = int(zz[0]) - prev_dc
    size = _magnitude(diff)
    code, length = dc_table[size]
    bw.put(code, length)
    if size:
        bits = diff if diff > 0 else diff + (1 << size) - 1
        bw.put(bits, size)
    run = 0
    last = 0
    nz = np.nonzero(zz[1:])[0]
    for idx in nz:
        run = int(idx) - last
        last = int(idx) + 1
        while run >= 16:
            code, length = ac_table[0xF0]
            bw.put(code, length)
            run -= 16
        val = int(zz[1 + idx])
        size = _magnitude(val)
        code, length = ac_table[(run << 4) | size]
        bw.put(code, length)
        bits = val if val > 0 else val + (1 << size) - 1
        bw.put(bits, size)
    if last != 63:
        code, length = ac_table[0x00]
        bw.put(code, length)
    return int(zz[0])


def _seg(marker, payload):
    return struct.pack(">HH", marker, len(payload) + 2) + payload


def _dqt(table_id, qtable):
    zz = qtable[_ZZ_ROWS, _ZZ_COLS].astype(np.uint8)
    return _seg(0xFFDB, bytes([table_id]) + zz.tobytes())


def _dht(table_class, table_id, bits, values):
    payload = bytes([(table_class << 4) | table_id]) + bytes(bits) + bytes(values)
    return _seg(0xFFC4, payload)


def _jfif_app0():
    payload = b"JFIF\x00" + struct.pack(">BBBHHBB", 1, 1, 0, 1, 1, 0, 0)
    return _seg(0xFFE0, payload)


def _rgb_to_ycbcr(r, g, b):
    r = r.astype(np.float64)
    g = g.astype(np.float64)
    b = b.astype(np.float64)
    y = 0.299 * r + 0.587 * g + 0.114 * b
    cb = -0.168736 * r - 0.331264 * g + 0.5 * b + 128.0
    cr = 0.5 * r - 0.418688 * g - 0.081312 * b + 128.0
    clamp = lambda p: np.clip(np.round(p), 0, 255).astype(np.uint8)
    return clamp(y), clamp(cb), clamp(cr)


def _subsample(plane):
    h, w = plane.shape
    quads = plane.reshape(h // 2, 2, w // 2, 2).astype(np.uint32)
    return ((quads.sum(axis=(1, 3)) + 2) >> 2).astype(np.uint8)


def encode_jpeg(img, quality=90):
    """Encode an image to JPEG bytes at the given quality (1..100)."""
    if not 1 <= quality <= 100:
        raise ValueError("quality must be in 1..100")
    w, h = img.width, img.height
    qy = scale_quant_table(QUANT_LUMA, quality)
    out = bytearray()
    out += b"\xFF\xD8"
    out += _jfif_app0()
    out += _dqt(0, qy)
    bw = BitWriter()

    if img.format is PixelFormat.GRAYSCALE8:
        out += _seg(0xFFC0, struct.pack(">BHHB", 8, h, w, 1)
                    + struct.pack(">BBB", 1, 0x11, 0))
        out += _dht(0, 0, DC_LUMA_BITS, DC_LUMA_VALS)
        out += _dht(1, 0, AC_LUMA_BITS, AC_LUMA_VALS)
        out += _seg(0xFFDA, struct.pack(">B", 1)
                    + struct.pack(">BB", 1, 0x00)
                    + struct.pack(">BBB", 0, 63, 0))
        plane = _pad_to_multiple(img.pixels, 8)
        dc = 0
        for zz in _plane_blocks(plane, qy):
            dc = _encode_block(bw, zz, dc, _DC_LUMA, _AC_LUMA)
    else:
        qc = scale_quant_table(QUANT_CHROMA, quality)
        out += _dqt(1, qc)
        out += _seg(0xFFC0, struct.pack(">BHHB", 8, h, w, 3)
                    + struct.pack(">BBB", 1, 0x22, 0)
                    + struct.pack(">BBB", 2, 0x11, 1)
                    + struct.pack(">BBB", 3, 0x11, 1))
        out += _dht(0, 0, DC_LUMA_BITS, DC_LUMA_VALS)
        out += _dht(1, 0, AC_LUMA_BITS, AC_LUMA_VALS)
        out += _dht(0, 1, DC_CHROMA_BITS, DC_CHROMA_VALS)
        out += _dht(1, 1, AC_CHROMA_BITS, AC_CHROMA_VALS)
        out += _seg(0xFFDA, struct.pack(">B", 3)
                    + struct.pack(">BB", 1, 0x00)
                    + struct.pack(">BB", 2, 0x11)
                    + struct.pack(">BB", 3, 0x11)
                    + struct.pack(">BBB", 0, 63, 0))
        r, g, b = expand565(img.pixels)
        y, cb, cr = _rgb_to_ycbcr(r, g, b)
        y = _pad_to_multiple(y, 16)
        cb = _subsample(_pad_to_multiple(cb, 16))
        cr = _subsample(_pad_to_multiple(cr, 16))
        yzz = _plane_blocks(y, qy)
        cbzz = _plane_blocks(cb, qc)
        crzz = _plane_blocks(cr, qc)
        mcu_w = y.shape[1] // 16
        mcu_h = y.shape[0] // 16
        yw = y.shape[1] // 8
        dcs = [0, 0, 0]
        for my in range(mcu_h):
            for mx in range(mcu_w):
                for sy in range(2):
                    for sx in range(2):
                        blk = yzz[(2 * my + sy) * yw + 2 * mx + sx]
                        dcs[0] = _encode_block(bw, blk, dcs[0], _DC_LUMA, _AC_LUMA)
                ci = my * mcu_w + mx
                dcs[1] = _encode_block(bw, cbzz[ci], dcs[1], _DC_CHROMA, _AC_CHROMA)
                dcs[2] = _encode_block(bw, crzz[ci], dcs[2], _DC_CHROMA, _AC_CHROMA)

    bw.flush()
    out += bw.out
    out += b"\xFF\xD9"
    return bytes(out)

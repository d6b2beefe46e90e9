"""Animated GIF writer (GIF89a, global 256-entry palette, LZW).

Grayscale frames map straight onto a 256-level gray ramp. Color frames are
quantized against a 6x6x6 color cube plus 40 extra gray levels by nearest
Euclidean distance, ties going to the lowest palette index.
"""

import struct

import numpy as np

from ..errors import DimensionMismatch
from ..imgproc import expand565
from ..membuf import PixelFormat


def gray_palette():
    pal = np.arange(256, dtype=np.uint8)
    return np.stack([pal, pal, pal], axis=1)


def color_palette():
    levels = np.array([0, 51, 102, 153, 204, 255], dtype=np.uint8)
    cube = np.zeros((216, 3), dtype=np.uint8)
    i = 0
    for r in levels:
        for g in levels:
            for b in levels:
                cube[i] = (r, g, b)
                i += 1
    grays = (np.arange(40, dtype=np.uint32) * 255 // 39).astype(np.uint8)
    tail = np.stack([grays, grays, grays], axis=1)
    return np.concatenate([cube, tail])


def nearest_index(rgb, palette):
    """Index of the closest palette entry per pixel; ties pick the lowest."""
    flat = rgb.reshape(-1, 3).astype(np.int32)
    pal = palette.astype(np.int32)
    d = flat[:, None, :] - pal[None, :, :]
    dist = (d * d).sum(axis=2)
    return dist.argmin(axis=1).astype(np.uint8).reshape(rgb.shape[:2])


class _LzwEncoder:
    """GIF-variant LZW, 8-bit minimum code size, LSB-first bit packing.

    The code width grows right after emitting a code once the next free
    slot no longer fits, and the table is flushed with a CLEAR when slot
    4095 would be assigned; this mirrors what giflib emits, so any GIF
    reader reconstructs the exact index stream.
    """

    CLEAR = 256
    EOI = 257

    def __init__(self):
        self.out = bytearray()
        self.acc = 0
        self.nbits = 0
        self.width = 9
        self.table = {}
        self.next_code = 258

    def _emit(self, code):
        self.acc |= code << self.nbits
        self.nbits += self.width
        while self.nbits >= 8:
            self.out.append(self.acc & 0xFF)
            self.acc >>= 8
            self.nbits -= 8
        if self.next_code >= (1 << self.width) and self.width < 12:
            self.width += 1

    def encode(self, indices):
        self._emit(self.CLEAR)
        it = iter(indices)
        try:
            prev = int(next(it))
        except StopIteration:
            self._emit(self.EOI)
            if self.nbits:
                self.out.append(self.acc & 0xFF)
            return bytes(self.out)
        for byte in it:
            byte = int(byte)
            key = (prev, byte)
            code = self.table.get(key)
            if code is not None:
                prev = code
                continue
            self._emit(prev)
            if self.next_code >= 4095:
                self._emit(self.CLEAR)
                self.table = {}
                self.next_code = 258
                self.width = 9
            else:
                self.table[key] = self.next_code
                self.next_code += 1
            prev = byte
        self._emit(prev)
        self._emit(self.EOI)
        if self.nbits:
            self.out.append(self.acc & 0xFF)
        return bytes(self.out)


def _subblocks(data):
    out = bytearray()
    for i in range(0, len(data), 255):
        chunk = data[i:i + 255]
        out.append(len(chunk))
        out += chunk
    out.append(0)
    return bytes(out)


class GifWriter:
    """Accumulates frames and renders the complete GIF on end().

    The palette is chosen by the first frame's pixel format and stays
    global for the whole animation.
    """

    def __init__(self, width, height, loop=True):
        self.width = width
        self.height = height
        self.loop = loop
        self.palette = None
        self.frames = []

    def add_frame(self, img, delay_cs=10):
        if img.width != self.width or img.height != self.height:
            raise DimensionMismatch("frame size differs from the GIF size")
        if self.palette is None:
            if img.format is PixelFormat.GRAYSCALE8:
                self.palette = gray_palette()
                self._gray_ramp = True
            else:
                self.palette = color_palette()
                self._gray_ramp = False
        if img.format is PixelFormat.GRAYSCALE8:
            if self._gray_ramp:
                indices = img.pixels.copy()
            else:
                g = img.pixels
                indices = nearest_index(np.stack([g, g, g], axis=2), self.palette)
        else:
            r, g, b = expand565(img.pixels)
            rgb = np.stack([r, g, b], axis=2).astype(np.uint8)
            indices = nearest_index(rgb, self.palette)
        self.frames.append((indices, int(delay_cs)))

    def end(self):
        out = bytearray()
        out += b"GIF89a"
        out += struct.pack("<HHBBB", self.width, self.height, 0xF7, 0, 0)
        pal = self.palette if self.palette is not None else gray_palette()
        out += pal.tobytes()
        if self.loop:
            out += b"\x21\xFF\x0B" + b"NETSCAPE2.0"
            out += b"\x03\x01" + struct.pack("<H", 0) + b"\x00"
        for indices, delay in self.frames:
            out += b"\x21\xF9\x04"
            out += struct.pack("<BHB", 1 << 2, delay, 0)  # do not dispose
            out += b"\x00"
            out += b"\x2C" + struct.pack("<HHHHB", 0, 0, self.width, self.height, 0)
            out += b"\x08"
            out += _subblocks(_LzwEncoder().encode(indices.reshape(-1)))
        out.append(0x3B)
        return bytes(out)

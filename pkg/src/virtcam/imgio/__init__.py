"""Image and video container codecs.

read_image / write_image cover the still formats (PGM, PPM, BMP, JPEG
encode only); GifWriter and MjpegWriter build animations frame by frame.
"""

from ..errors import UnsupportedFormat
from .avi import MjpegWriter
from .bmp import read_bmp, write_bmp
from .gif import GifWriter
from .jpeg import encode_jpeg
from .pnm import read_pnm, write_pgm, write_ppm

FORMATS = ("pgm", "ppm", "bmp", "jpeg")


def read_image(data, arena):
    """Decode PGM/PPM/BMP bytes into a new arena-backed image."""
    magic = bytes(data[:2])
    if magic in (b"P2", b"P3", b"P5", b"P6"):
        return read_pnm(data, arena)
    if magic == b"BM":
        return read_bmp(data, arena)
    raise UnsupportedFormat("unrecognized image magic %r" % magic)


def write_image(img, fmt, quality=90):
    """Encode an image to bytes; fmt is one of pgm, ppm, bmp, jpeg."""
    fmt = fmt.lower().lstrip(".")
    if fmt == "pgm":
        return write_pgm(img)
    if fmt == "ppm":
        return write_ppm(img)
    if fmt == "bmp":
        return write_bmp(img)
    if fmt in ("jpeg", "jpg"):
        return encode_jpeg(img, quality)
    raise UnsupportedFormat("unknown output format %r" % fmt)


__all__ = [
    "FORMATS",
    "GifWriter",
    "MjpegWriter",
    "encode_jpeg",
    "read_image",
    "write_image",
]

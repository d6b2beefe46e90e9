"""Luma conversion shared by the detection paths."""

import numpy as np

from ..errors import WrongFormat
from ..imgproc import expand565
from ..membuf import Image, PixelFormat


def to_grayscale(img, arena):
    """RGB565 -> GRAYSCALE8 via (77*R8 + 150*G8 + 29*B8) >> 8."""
    if img.format is not PixelFormat.RGB565:
        raise WrongFormat("to_grayscale expects an RGB565 image")
    r, g, b = expand565(img.pixels)
    gray = (77 * r.astype(np.uint32) + 150 * g.astype(np.uint32)
            + 29 * b.astype(np.uint32)) >> 8
    out = Image(arena, img.width, img.height, PixelFormat.GRAYSCALE8)
    out.pixels[:] = gray.astype(np.uint8)
    return out

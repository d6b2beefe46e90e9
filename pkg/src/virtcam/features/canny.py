"""Canny edge detection with integer gradients and L1 magnitude."""

import numpy as np

from ..errors import BadThresholds, WrongFormat
from ..imgproc import _conv1d_fixed, gaussian_kernel
from ..membuf import Image, PixelFormat

# tan(22.5 degrees) as a rational approximation for the direction bins
_TAN_NUM = 4142
_TAN_DEN = 10000


def _sobel(px):
    p = np.pad(px.astype(np.int32), 1, mode="edge")
    gx = (p[:-2, 2:] + 2 * p[1:-1, 2:] + p[2:, 2:]
          - p[:-2, :-2] - 2 * p[1:-1, :-2] - p[2:, :-2])
    gy = (p[2:, :-2] + 2 * p[2:, 1:-1] + p[2:, 2:]
          - p[:-2, :-2] - 2 * p[:-2, 1:-1] - p[:-2, 2:])
    return gx, gy


def gradient_field(px):
    """Blur (5-tap), Sobel, L1 magnitude, and 4-way quantized direction.

    Directions index the NMS neighbor offset: 0 = (1,0), 1 = (0,1),
    2 = (1,1), 3 = (1,-1).
    """
    weights = gaussian_kernel(5)
    blurred = _conv1d_fixed(_conv1d_fixed(px, weights, axis=1),
                            weights, axis=0)
    blurred = np.clip(blurred, 0, 255).astype(np.uint8)
    gx, gy = _sobel(blurred)
    mag = np.abs(gx) + np.abs(gy)
    ax = np.abs(gx).astype(np.int64)
    ay = np.abs(gy).astype(np.int64)
    direction = np.empty(px.shape, dtype=np.uint8)
    horiz = ay * _TAN_DEN <= ax * _TAN_NUM
    vert = ax * _TAN_DEN <= ay * _TAN_NUM
    same_sign = (gx >= 0) == (gy >= 0)
    direction[:] = np.where(horiz, 0, np.where(vert, 1,
                            np.where(same_sign, 2, 3)))
    return mag, direction


_NMS_OFFSETS = ((1, 0), (0, 1), (1, 1), (1, -1))


def nonmax_suppress(mag, direction):
    """Keep pixels that dominate along their gradient direction.

    The forward neighbor is compared with >=, the backward one with >,
    so a two-wide plateau thins to its first pixel.
    """
    h, w = mag.shape
    padded = np.pad(mag, 1)  # off-image neighbors read as 0
    keep = np.zeros((h, w), dtype=bool)
    for d, (dx, dy) in enumerate(_NMS_OFFSETS):
        fwd = padded[1 + dy:1 + dy + h, 1 + dx:1 + dx + w]
        back = padded[1 - dy:1 - dy + h, 1 - dx:1 - dx + w]
        keep |= (direction == d) & (mag >= fwd) & (mag > back)
    return keep


def _dilate8(mask):
    p = np.pad(mask, 1)
    out = mask.copy()
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            if dx == 0 and dy == 0:
                continue
            out |= p[1 + dy:1 + dy + mask.shape[0],
                     1 + dx:1 + dx + mask.shape[1]]
    return out


def canny(img, low, high, arena):
    """Binary 0/255 edge map via blur, Sobel, NMS, and hysteresis."""
    if img.format is not PixelFormat.GRAYSCALE8:
        raise WrongFormat("canny expects GRAYSCALE8")
    if low > high:
        raise BadThresholds("low threshold exceeds high")
    mag, direction = gradient_field(img.pixels)
    thin = nonmax_suppress(mag, direction)
    weak = thin & (mag >= low)
    strong = thin & (mag >= high)
    edges = strong
    while True:
        grown = _dilate8(edges) & weak
        grown |= edges
        if (grown == edges).all():
            break
        edges = grown
    out = Image(arena, img.width, img.height, PixelFormat.GRAYSCALE8)
    out.pixels[:] = np.where(edges, 255, 0).astype(np.uint8)
    return out

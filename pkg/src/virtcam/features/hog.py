"""Histogram-of-oriented-gradients descriptor over an 8x8 cell grid."""

import numpy as np

from ..errors import BadRoi, WrongFormat
from ..membuf import PixelFormat

CELL = 8
BINS = 9
BIN_WIDTH = 180.0 / BINS


def hog_descriptor(img, roi):
    """roi = (x, y, w, h), sides multiples of 8 and at least 16.

    Returns a float vector ordered row-major over 2x2-cell blocks
    (stride one cell), row-major over a block's cells, bins ascending.
    Each block is L2-normalized, clipped at 0.2, and renormalized.
    """
    if img.format is not PixelFormat.GRAYSCALE8:
        raise WrongFormat("hog_descriptor expects GRAYSCALE8")
    rx, ry, rw, rh = roi
    if rw % CELL or rh % CELL or rw < 2 * CELL or rh < 2 * CELL:
        raise BadRoi("roi sides must be multiples of 8, at least 16x16")
    if rx < 0 or ry < 0 or rx + rw > img.width or ry + rh > img.height:
        raise BadRoi("roi outside image")
    patch = img.pixels[ry:ry + rh, rx:rx + rw].astype(np.float64)

    idx_r = np.minimum(np.arange(rw) + 1, rw - 1)
    idx_l = np.maximum(np.arange(rw) - 1, 0)
    idx_d = np.minimum(np.arange(rh) + 1, rh - 1)
    idx_u = np.maximum(np.arange(rh) - 1, 0)
    gx = patch[:, idx_r] - patch[:, idx_l]
    gy = patch[idx_d, :] - patch[idx_u, :]

    mag = np.hypot(gx, gy)
    ang = np.degrees(np.arctan2(gy, gx)) % 180.0
    pos = ang / BIN_WIDTH
    lo = np.floor(pos).astype(np.int64) % BINS
    frac = pos - np.floor(pos)
    hi = (lo + 1) % BINS

    cells_y = rh // CELL
    cells_x = rw // CELL
    cy = (np.arange(rh) // CELL)[:, None]
    cx = (np.arange(rw) // CELL)[None, :]
    cell_of = (cy * cells_x + cx).astype(np.int64)
    hist = np.zeros((cells_y * cells_x, BINS), dtype=np.float64)
    np.add.at(hist, (cell_of.ravel(), lo.ravel()), (mag * (1.0 - frac)).ravel())
    np.add.at(hist, (cell_of.ravel(), hi.ravel()), (mag * frac).ravel())
    hist = hist.reshape(cells_y, cells_x, BINS)

    out = []
    for by in range(cells_y - 1):
        for bx in range(cells_x - 1):
            block = np.concatenate([
                hist[by, bx], hist[by, bx + 1],
                hist[by + 1, bx], hist[by + 1, bx + 1],
            ])
            norm = np.sqrt((block * block).sum())
            if norm > 0:
                block = block / norm
                np.minimum(block, 0.2, out=block)
                norm = np.sqrt((block * block).sum())
                if norm > 0:
                    block = block / norm
            out.append(block)
    return np.concatenate(out) if out else np.zeros(0)

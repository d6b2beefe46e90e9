"""Eye-center localization from image gradients.

Scores every candidate center c in the ROI by the squared agreement
between unit gradients g_i and unit displacements d_i from c to each
gradient location, weighted by a dark-center prior, and returns the
argmax. Ties break toward smaller y, then smaller x.
"""

import numpy as np

from ..errors import DegenerateRoi, OutOfBounds, WrongFormat
from ..imgproc import _conv1d_fixed, gaussian_kernel
from ..membuf import PixelFormat

GRAD_THRESH_FRAC = 0.3  # keep gradients with magnitude >= frac * max


def find_eye_center(img, roi):
    """roi = (x, y, w, h); returns the best center as absolute (x, y)."""
    if img.format is not PixelFormat.GRAYSCALE8:
        raise WrongFormat("find_eye_center expects GRAYSCALE8")
    rx, ry, rw, rh = roi
    if rw < 3 or rh < 3:
        raise OutOfBounds("roi must be at least 3x3")
    if rx < 0 or ry < 0 or rx + rw > img.width or ry + rh > img.height:
        raise OutOfBounds("roi outside image")
    patch = img.pixels[ry:ry + rh, rx:rx + rw].astype(np.float64)

    gx = np.empty_like(patch)
    gy = np.empty_like(patch)
    gx[:, 1:-1] = (patch[:, 2:] - patch[:, :-2]) / 2.0
    gx[:, 0] = patch[:, 1] - patch[:, 0]
    gx[:, -1] = patch[:, -1] - patch[:, -2]
    gy[1:-1, :] = (patch[2:, :] - patch[:-2, :]) / 2.0
    gy[0, :] = patch[1, :] - patch[0, :]
    gy[-1, :] = patch[-1, :] - patch[-2, :]

    mag = np.hypot(gx, gy)
    peak = mag.max()
    if peak <= 0.0:
        raise DegenerateRoi("no gradients in roi")
    keep = mag >= GRAD_THRESH_FRAC * peak
    if not keep.any():
        raise DegenerateRoi("no gradients above threshold in roi")

    ys, xs = np.nonzero(keep)
    ux = gx[ys, xs] / mag[ys, xs]
    uy = gy[ys, xs] / mag[ys, xs]
    xs_f = xs.astype(np.float64)
    ys_f = ys.astype(np.float64)
    n = len(xs)

    weights = gaussian_kernel(5)
    smooth = _conv1d_fixed(_conv1d_fixed(patch.astype(np.int64),
                                         weights, axis=1), weights, axis=0)
    prior = 255.0 - np.clip(smooth, 0, 255).astype(np.float64)

    best = None
    best_cx = best_cy = 0
    dx = xs_f[None, :] - np.arange(rw, dtype=np.float64)[:, None]
    for cy in range(rh):
        dy = ys_f[None, :] - float(cy)
        dist = np.hypot(dx, dy)
        np.maximum(dist, 1e-12, out=dist)
        dots = (dx * ux[None, :] + dy * uy[None, :]) / dist
        dots[dist < 0.5] = 0.0  # the candidate pixel itself
        obj = prior[cy, :] * (dots * dots).sum(axis=1) / n
        cx = int(np.argmax(obj))
        if best is None or obj[cx] > best:
            best = float(obj[cx])
            best_cx, best_cy = cx, cy
    return rx + best_cx, ry + best_cy

"""Hough transform for straight lines in normal form rho = x cos + y sin."""

import collections
import math

import numpy as np

from ..errors import WrongFormat
from ..membuf import PixelFormat

LineHit = collections.namedtuple("LineHit", "rho theta votes")


def hough_lines(edges, threshold, theta_step=1, rho_step=1):
    """Peaks of the vote accumulator over a 0/255 edge map.

    theta spans [0, 180) degrees; rho spans [-D, D] with D the image
    diagonal. Cells need >= threshold votes and must be 3x3 local maxima;
    results sort by votes descending, then theta, then rho.
    """
    if edges.format is not PixelFormat.GRAYSCALE8:
        raise WrongFormat("hough_lines expects a GRAYSCALE8 edge map")
    ys, xs = np.nonzero(edges.pixels)
    n_theta = 180 // theta_step
    diag = int(math.ceil(math.hypot(edges.width, edges.height)))
    n_rho_half = -(-diag // rho_step)  # ceil division
    n_rho = 2 * n_rho_half + 1
    acc = np.zeros((n_theta, n_rho), dtype=np.int64)
    if len(xs):
        thetas = np.deg2rad(np.arange(n_theta) * theta_step)
        cos_t = np.cos(thetas)
        sin_t = np.sin(thetas)
        rho = np.floor((xs[None, :] * cos_t[:, None]
                        + ys[None, :] * sin_t[:, None]) / rho_step
                       + 0.5).astype(np.int64)
        rows = np.repeat(np.arange(n_theta), len(xs))
        np.add.at(acc, (rows, (rho + n_rho_half).ravel()), 1)

    padded = np.pad(acc, 1)
    local_max = np.ones(acc.shape, dtype=bool)
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            if dx == 0 and dy == 0:
                continue
            local_max &= acc >= padded[1 + dy:1 + dy + acc.shape[0],
                                       1 + dx:1 + dx + acc.shape[1]]
    hits = []
    ti, ri = np.nonzero(local_max & (acc >= threshold))
    for t, r in zip(ti, ri):
        hits.append(LineHit((int(r) - n_rho_half) * rho_step,
                            int(t) * theta_step, int(acc[t, r])))
    hits.sort(key=lambda hit: (-hit.votes, hit.theta, hit.rho))
    return hits

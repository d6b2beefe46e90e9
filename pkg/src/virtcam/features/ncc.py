"""Zero-mean normalized cross-correlation template matching.

The exhaustive matcher computes the full score surface with window sums
taken from integral tables (the classic fast-NCC factorization); diamond
search probes the same score function at a small set of placements. Both
report how many placements they evaluated so the saving is checkable.
"""

import collections

import numpy as np

from ..errors import (DimensionMismatch, ImageTooSmall, OutOfBounds,
                      TemplateTooLarge, WrongFormat)
from ..membuf import PixelFormat

MotionVector = collections.namedtuple("MotionVector", "dx dy response")

LDSP = ((0, 0), (0, -2), (-1, -1), (1, -1), (-2, 0),
        (2, 0), (-1, 1), (1, 1), (0, 2))
SDSP = ((0, 0), (0, -1), (-1, 0), (1, 0), (0, 1))

_DEGENERATE = 1e-9


def _check_gray(img):
    if img.format is not PixelFormat.GRAYSCALE8:
        raise WrongFormat("NCC operations expect GRAYSCALE8")


class NccField:
    """Score evaluator for one image/template pair.

    Evaluations are counted in .evaluations; scores are cached so a
    placement is only ever computed once.
    """

    def __init__(self, img_px, tmpl_px):
        self.f = img_px.astype(np.float64)
        self.th, self.tw = tmpl_px.shape
        h, w = img_px.shape
        self.max_x = w - self.tw
        self.max_y = h - self.th
        t = tmpl_px.astype(np.float64)
        self.tz = t - t.mean()
        self.t_energy = float((self.tz * self.tz).sum())
        self.n = self.th * self.tw
        table = np.zeros((h + 1, w + 1), dtype=np.int64)
        np.cumsum(img_px, axis=0, out=table[1:, 1:])
        np.cumsum(table[1:, 1:], axis=1, out=table[1:, 1:])
        self.sums = table
        sq = img_px.astype(np.int64) ** 2
        table2 = np.zeros((h + 1, w + 1), dtype=np.int64)
        np.cumsum(sq, axis=0, out=table2[1:, 1:])
        np.cumsum(table2[1:, 1:], axis=1, out=table2[1:, 1:])
        self.sqsums = table2
        self.cache = {}
        self.evaluations = 0

    def valid(self, x, y):
        return 0 <= x <= self.max_x and 0 <= y <= self.max_y

    def _rect(self, table, x, y):
        return (table[y + self.th, x + self.tw] - table[y, x + self.tw]
                - table[y + self.th, x] + table[y, x])

    def score(self, x, y):
        key = (x, y)
        cached = self.cache.get(key)
        if cached is not None:
            return cached
        self.evaluations += 1
        if self.t_energy <= _DEGENERATE:
            self.cache[key] = 0.0
            return 0.0
        fsum = float(self._rect(self.sums, x, y))
        fsq = float(self._rect(self.sqsums, x, y))
        f_energy = fsq - fsum * fsum / self.n
        if f_energy <= _DEGENERATE:
            self.cache[key] = 0.0
            return 0.0
        window = self.f[y:y + self.th, x:x + self.tw]
        numer = float((window * self.tz).sum())
        s = numer / np.sqrt(f_energy * self.t_energy)
        self.cache[key] = s
        return s

    def surface(self, x0, y0, x1, y1):
        """Scores for every placement in [x0,x1] x [y0,y1], vectorized."""
        th, tw = self.th, self.tw
        sub = self.f[y0:y1 + th, x0:x1 + tw]
        windows = np.lib.stride_tricks.sliding_window_view(sub, (th, tw))
        numer = np.einsum("ijkl,kl->ij", windows, self.tz)
        s = self.sums[y0:y1 + th + 1, x0:x1 + tw + 1]
        q = self.sqsums[y0:y1 + th + 1, x0:x1 + tw + 1]
        fsum = (s[th:, tw:] - s[:-th, tw:] - s[th:, :-tw] + s[:-th, :-tw])
        fsq = (q[th:, tw:] - q[:-th, tw:] - q[th:, :-tw] + q[:-th, :-tw])
        f_energy = fsq.astype(np.float64) - fsum.astype(np.float64) ** 2 / self.n
        out = np.zeros(numer.shape, dtype=np.float64)
        if self.t_energy > _DEGENERATE:
            good = f_energy > _DEGENERATE
            denom = np.sqrt(np.where(good, f_energy * self.t_energy, 1.0))
            np.divide(numer, denom, out=out, where=good)
        self.evaluations += out.size
        return out


def _roi_bounds(field, img_px, roi):
    if roi is None:
        x0 = y0 = 0
        x1, y1 = field.max_x, field.max_y
    else:
        rx, ry, rw, rh = roi
        if rx < 0 or ry < 0 or rx + rw > img_px.shape[1] \
                or ry + rh > img_px.shape[0]:
            raise OutOfBounds("roi outside image")
        if field.tw > rw or field.th > rh:
            raise TemplateTooLarge("template larger than the search roi")
        x0, y0 = rx, ry
        x1 = rx + rw - field.tw
        y1 = ry + rh - field.th
    if x1 < 0 or y1 < 0:
        raise TemplateTooLarge("template larger than the image")
    return x0, y0, x1, y1


def ncc_scores(img, template, roi=None):
    """Full score surface over the roi; index [j, i] is placement
    (x0 + i, y0 + j). Mainly for verification."""
    _check_gray(img)
    _check_gray(template)
    field = NccField(img.pixels, template.pixels)
    x0, y0, x1, y1 = _roi_bounds(field, img.pixels, roi)
    return field.surface(x0, y0, x1, y1)


def ncc_match_exhaustive(img, template, roi=None, stats=None):
    """Best placement over every in-roi position; ties smallest y then x."""
    _check_gray(img)
    _check_gray(template)
    field = NccField(img.pixels, template.pixels)
    x0, y0, x1, y1 = _roi_bounds(field, img.pixels, roi)
    scores = field.surface(x0, y0, x1, y1)
    flat = int(np.argmax(scores))  # first occurrence = smallest y then x
    j, i = divmod(flat, scores.shape[1])
    if stats is not None:
        stats["evaluations"] = field.evaluations
    return x0 + i, y0 + j, float(scores[j, i])


def _probe(field, center, offsets, bounds, best_score):
    """Best strictly-improving placement among center+offsets, else None."""
    x0, y0, x1, y1 = bounds
    best = None
    for dx, dy in offsets:
        if dx == 0 and dy == 0:
            continue
        px, py = center[0] + dx, center[1] + dy
        if not (x0 <= px <= x1 and y0 <= py <= y1):
            continue
        s = field.score(px, py)
        if s > best_score:
            best_score = s
            best = (px, py)
    return best, best_score


def _diamond_search(field, start, bounds, refine):
    center = start
    best_score = field.score(*center)
    while True:
        improved, best_score = _probe(field, center, LDSP, bounds, best_score)
        if improved is None:
            break
        center = improved
    improved, best_score = _probe(field, center, SDSP, bounds, best_score)
    if improved is not None:
        center = improved
    if refine:
        improved, best_score = _probe(field, center, LDSP, bounds, best_score)
        if improved is not None:
            center = improved
    return center, best_score


def ncc_match_ds(img, template, start, roi=None, stats=None, refine=False):
    """Diamond search from a starting placement.

    Walks the large diamond pattern until no neighbor improves on the
    center, then takes one small-diamond step. With refine=True a final
    large-diamond probe runs after that, re-centering once more if it
    improves. Returns (x, y, score).
    """
    _check_gray(img)
    _check_gray(template)
    field = NccField(img.pixels, template.pixels)
    bounds = _roi_bounds(field, img.pixels, roi)
    x0, y0, x1, y1 = bounds
    cx, cy = start
    if not (x0 <= cx <= x1 and y0 <= cy <= y1):
        raise OutOfBounds("start placement (%d,%d) not a valid placement"
                          % (cx, cy))
    center, best_score = _diamond_search(field, (cx, cy), bounds, refine)
    if stats is not None:
        stats["evaluations"] = field.evaluations
    return center[0], center[1], best_score


def optical_flow(prev, next_img, radius=8, stats=None):
    """Single global motion vector between two equal-size images.

    The central block of prev (a radius-wide margin removed) is matched
    in next_img by diamond search seeded at zero displacement, with a
    final large-diamond refinement.
    """
    _check_gray(prev)
    _check_gray(next_img)
    if prev.width != next_img.width or prev.height != next_img.height:
        raise DimensionMismatch("optical flow needs equal-size images")
    if prev.width <= 2 * radius or prev.height <= 2 * radius:
        raise ImageTooSmall("images must be larger than 2*radius")
    tmpl = prev.pixels[radius:prev.height - radius,
                       radius:prev.width - radius]
    field = NccField(next_img.pixels, tmpl)
    bounds = (0, 0, field.max_x, field.max_y)  # exactly [-radius, radius]^2
    center, best_score = _diamond_search(field, (radius, radius), bounds,
                                         refine=True)
    if stats is not None:
        stats["evaluations"] = field.evaluations
    return MotionVector(center[0] - radius, center[1] - radius, best_score)

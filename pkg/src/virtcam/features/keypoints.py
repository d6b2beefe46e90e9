"""FAST-9 corner detection, steered binary descriptors, and matching.

The descriptor pattern is 256 point pairs drawn once from a seeded
Gaussian (seed 0x12345678, sigma 3, rejection-sampled into the radius-15
disk), so descriptors are reproducible across runs and platforms. The
pattern is rotated by each keypoint's intensity-centroid angle and
compared on a 9x9 box-smoothed copy of the image.
"""

import math
import random

import numpy as np

from ..errors import MissingDescriptors, WrongFormat
from ..membuf import PixelFormat

# Radius-3 Bresenham circle, clockwise from 12 o'clock.
CIRCLE = (
    (0, -3), (1, -3), (2, -2), (3, -1),
    (3, 0), (3, 1), (2, 2), (1, 3),
    (0, 3), (-1, 3), (-2, 2), (-3, 1),
    (-3, 0), (-3, -1), (-2, -2), (-1, -3),
)

SEGMENT_LEN = 9
BORDER = 3
PATCH_RADIUS = 15
DESCRIPTOR_BITS = 256
PATTERN_SEED = 0x12345678


class Keypoint:
    __slots__ = ("x", "y", "score", "angle", "descriptor")

    def __init__(self, x, y, score, angle=0.0, descriptor=None):
        self.x = x
        self.y = y
        self.score = score
        self.angle = angle
        self.descriptor = descriptor

    def __repr__(self):
        return "Keypoint(x=%d, y=%d, score=%d)" % (self.x, self.y, self.score)


def _build_pattern():
    rng = random.Random(PATTERN_SEED)

    def point():
        while True:
            x = int(round(rng.gauss(0, 3)))
            y = int(round(rng.gauss(0, 3)))
            if x * x + y * y <= PATCH_RADIUS * PATCH_RADIUS:
                return x, y

    return tuple((point(), point()) for _ in range(DESCRIPTOR_BITS))

PATTERN = _build_pattern()

_DISK = tuple((dx, dy)
              for dy in range(-PATCH_RADIUS, PATCH_RADIUS + 1)
              for dx in range(-PATCH_RADIUS, PATCH_RADIUS + 1)
              if dx * dx + dy * dy <= PATCH_RADIUS * PATCH_RADIUS)


def _ring_masks(px, t):
    """Per-pixel bright/dark masks for all 16 circle offsets (interior only)."""
    h, w = px.shape
    ih, iw = h - 2 * BORDER, w - 2 * BORDER
    center = px[BORDER:h - BORDER, BORDER:w - BORDER].astype(np.int16)
    bright = np.empty((16, ih, iw), dtype=bool)
    dark = np.empty((16, ih, iw), dtype=bool)
    for k, (dx, dy) in enumerate(CIRCLE):
        ring = px[BORDER + dy:BORDER + dy + ih,
                  BORDER + dx:BORDER + dx + iw].astype(np.int16)
        bright[k] = ring > center + t
        dark[k] = ring < center - t
    return bright, dark


def _has_segment(mask16):
    """True where some 9-long circular run of the 16 ring flags is all set."""
    doubled = np.concatenate([mask16, mask16[:SEGMENT_LEN - 1]], axis=0)
    out = np.zeros(mask16.shape[1:], dtype=bool)
    for start in range(16):
        run = doubled[start]
        for k in range(1, SEGMENT_LEN):
            run = run & doubled[start + k]
            if not run.any():
                break
        else:
            out |= run
    return out


def _passes_at(px, x, y, t):
    """Single-pixel segment test, used by the score search."""
    p = int(px[y, x])
    flags_b = 0
    flags_d = 0
    for k, (dx, dy) in enumerate(CIRCLE):
        v = int(px[y + dy, x + dx])
        if v > p + t:
            flags_b |= 1 << k
        elif v < p - t:
            flags_d |= 1 << k
    for flags in (flags_b, flags_d):
        doubled = flags | (flags << 16)
        run = doubled
        for _ in range(SEGMENT_LEN - 1):
            run &= doubled >> 1
            doubled >>= 1
        if run & 0xFFFF:
            return True
    return False


def _corner_score(px, x, y, t):
    """Largest threshold at which the segment test still passes."""
    lo, hi = t, 255
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if _passes_at(px, x, y, mid):
            lo = mid
        else:
            hi = mid - 1
    return lo


def fast_detect(img, threshold, nonmax=True):
    """FAST-9 corners; score is the max passing threshold; raster order."""
    if img.format is not PixelFormat.GRAYSCALE8:
        raise WrongFormat("fast_detect expects GRAYSCALE8")
    if img.width < 2 * BORDER + 1 or img.height < 2 * BORDER + 1:
        return []
    px = img.pixels
    bright, dark = _ring_masks(px, threshold)
    corners = _has_segment(bright) | _has_segment(dark)
    ys, xs = np.nonzero(corners)
    if len(ys) == 0:
        return []
    scores = np.zeros(corners.shape, dtype=np.int32)
    for y, x in zip(ys, xs):
        scores[y, x] = _corner_score(px, x + BORDER, y + BORDER, threshold)
    if nonmax:
        # >= keeps equal-score plateaus whole, so the result is invariant
        # under mirroring; non-corners hold score 0 and never win.
        padded = np.pad(scores, 1)
        keep = np.ones(corners.shape, dtype=bool)
        for dy in (-1, 0, 1):
            for dx in (-1, 0, 1):
                if dx == 0 and dy == 0:
                    continue
                shifted = padded[1 + dy:1 + dy + scores.shape[0],
                                 1 + dx:1 + dx + scores.shape[1]]
                keep &= scores >= shifted
        corners &= keep
        ys, xs = np.nonzero(corners)
    return [Keypoint(int(x) + BORDER, int(y) + BORDER, int(scores[y, x]))
            for y, x in zip(ys, xs)]


def _box_smooth9(px):
    """9x9 box mean (integer floor) with replicate padding."""
    padded = np.pad(px, 4, mode="edge").astype(np.uint32)
    table = np.zeros((padded.shape[0] + 1, padded.shape[1] + 1), dtype=np.uint32)
    np.cumsum(padded, axis=0, out=table[1:, 1:])
    np.cumsum(table[1:, 1:], axis=1, out=table[1:, 1:])
    h, w = px.shape
    sums = (table[9:9 + h, 9:9 + w] + table[:h, :w]
            - table[:h, 9:9 + w] - table[9:9 + h, :w])
    return (sums // 81).astype(np.uint8)


def orb_describe(img, keypoints):
    """Attach angle + 256-bit descriptor; drops keypoints near the border."""
    if img.format is not PixelFormat.GRAYSCALE8:
        raise WrongFormat("orb_describe expects GRAYSCALE8")
    px = img.pixels
    h, w = px.shape
    margin = PATCH_RADIUS + 1
    smooth = _box_smooth9(px)
    out = []
    for kp in keypoints:
        if kp.x < margin or kp.y < margin \
                or kp.x >= w - margin or kp.y >= h - margin:
            continue
        m10 = 0
        m01 = 0
        for dx, dy in _DISK:
            v = int(px[kp.y + dy, kp.x + dx])
            m10 += dx * v
            m01 += dy * v
        angle = math.atan2(m01, m10)
        if angle < 0:
            angle += 2 * math.pi
        cos_a = math.cos(angle)
        sin_a = math.sin(angle)
        desc = bytearray(DESCRIPTOR_BITS // 8)
        for i, ((ax, ay), (bx, by)) in enumerate(PATTERN):
            arx = int(round(ax * cos_a - ay * sin_a))
            ary = int(round(ax * sin_a + ay * cos_a))
            brx = int(round(bx * cos_a - by * sin_a))
            bry = int(round(bx * sin_a + by * cos_a))
            va = smooth[kp.y + ary, kp.x + arx]
            vb = smooth[kp.y + bry, kp.x + brx]
            if va < vb:
                desc[i >> 3] |= 0x80 >> (i & 7)
        kp.angle = angle
        kp.descriptor = bytes(desc)
        out.append(kp)
    return out


def hamming(a, b):
    return (int.from_bytes(a, "big") ^ int.from_bytes(b, "big")).bit_count()


def match_descriptors(a, b, max_distance=64, ratio=75):
    """Nearest-neighbor matching with a second-best ratio test.

    Keeps (i, j, d) when d <= max_distance and d*100 <= ratio*second_best.
    Ties on distance go to the lowest index in b.
    """
    for kp in list(a) + list(b):
        if kp.descriptor is None:
            raise MissingDescriptors("keypoint lacks a descriptor")
    b_ints = [int.from_bytes(kp.descriptor, "big") for kp in b]
    matches = []
    for i, kp in enumerate(a):
        ai = int.from_bytes(kp.descriptor, "big")
        best = second = None
        best_j = -1
        for j, bi in enumerate(b_ints):
            d = (ai ^ bi).bit_count()
            if best is None or d < best:
                second = best
                best = d
                best_j = j
            elif second is None or d < second:
                second = d
        if best is None or best > max_distance:
            continue
        if second is not None and best * 100 > ratio * second:
            continue
        matches.append((i, best_j, best))
    return matches

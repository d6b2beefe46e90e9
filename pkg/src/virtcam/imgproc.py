"""Basic image handling: crop, scale, blend, drawing, pixel access,
rank and Gaussian filters, histogram equalization.

Filters run on GRAYSCALE8 only; RGB565 callers convert first. All border
handling is replicate (clamp). Fixed-point convolution uses 8 fractional
bits with round-half-up, mirroring integer DSP pipelines.
"""

import math

import numpy as np

from .errors import (BadKernelSize, DimensionMismatch, OutOfBounds,
                     WrongFormat)
from .font8x8 import glyph_rows
from .membuf import Image, PixelFormat


# ---------------------------------------------------------------------------
# RGB565 channel packing

def unpack565(values):
    """uint16 array -> (r5, g6, b5) raw channel arrays."""
    v = np.asarray(values, dtype=np.uint16)
    return ((v >> 11) & 0x1F).astype(np.int64), ((v >> 5) & 0x3F).astype(np.int64), (v & 0x1F).astype(np.int64)


def pack565(r5, g6, b5):
    return ((np.asarray(r5, dtype=np.uint16) << 11)
            | (np.asarray(g6, dtype=np.uint16) << 5)
            | np.asarray(b5, dtype=np.uint16))


def expand565(values):
    """uint16 array -> 8-bit (r, g, b) via bit replication."""
    r5, g6, b5 = unpack565(values)
    return (r5 << 3) | (r5 >> 2), (g6 << 2) | (g6 >> 4), (b5 << 3) | (b5 >> 2)


def pack565_from_rgb8(r8, g8, b8):
    """8-bit channels -> RGB565 by 5-6-5 truncation."""
    r = np.asarray(r8, dtype=np.uint16) >> 3
    g = np.asarray(g8, dtype=np.uint16) >> 2
    b = np.asarray(b8, dtype=np.uint16) >> 3
    return pack565(r, g, b)


# ---------------------------------------------------------------------------
# Geometry ops

def crop(img, x, y, w, h, arena):
    if w < 1 or h < 1:
        raise OutOfBounds("crop size must be >= 1x1")
    if x < 0 or y < 0 or x + w > img.width or y + h > img.height:
        raise OutOfBounds("crop (%d,%d,%d,%d) outside %dx%d image"
                          % (x, y, w, h, img.width, img.height))
    out = Image(arena, w, h, img.format)
    out.pixels[:] = img.pixels[y:y + h, x:x + w]
    return out


NEAREST = "nearest"
BILINEAR = "bilinear"


def _nearest_index(n_out, n_in):
    return (np.arange(n_out, dtype=np.int64) * n_in) // n_out


def _bilinear_channel(ch, new_w, new_h):
    h, w = ch.shape
    sx = (np.arange(new_w, dtype=np.float64) + 0.5) * (w / new_w) - 0.5
    sy = (np.arange(new_h, dtype=np.float64) + 0.5) * (h / new_h) - 0.5
    sx = np.clip(sx, 0.0, w - 1.0)
    sy = np.clip(sy, 0.0, h - 1.0)
    x0 = np.floor(sx).astype(np.int64)
    y0 = np.floor(sy).astype(np.int64)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = sx - x0
    fy = sy - y0
    c = ch.astype(np.float64)
    top = c[np.ix_(y0, x0)] * (1 - fx) + c[np.ix_(y0, x1)] * fx
    bot = c[np.ix_(y1, x0)] * (1 - fx) + c[np.ix_(y1, x1)] * fx
    out = top * (1 - fy)[:, None] + bot * fy[:, None]
    return np.floor(out + 0.5).astype(np.int64)


def scale(img, new_w, new_h, method, arena):
    """NEAREST maps (i,j) -> img(floor(i*w/new_w), floor(j*h/new_h));
    BILINEAR interpolates with half-pixel centers, rounding half-up."""
    if new_w < 1 or new_h < 1:
        raise ValueError("scaled size must be >= 1x1")
    if method not in (NEAREST, BILINEAR):
        raise ValueError("unknown scale method %r" % (method,))
    out = Image(arena, new_w, new_h, img.format)
    src = img.pixels
    if method == NEAREST:
        xi = _nearest_index(new_w, img.width)
        yi = _nearest_index(new_h, img.height)
        out.pixels[:] = src[np.ix_(yi, xi)]
    else:
        if img.format is PixelFormat.GRAYSCALE8:
            out.pixels[:] = _bilinear_channel(src, new_w, new_h).astype(np.uint8)
        else:
            r, g, b = unpack565(src)
            out.pixels[:] = pack565(_bilinear_channel(r, new_w, new_h),
                                    _bilinear_channel(g, new_w, new_h),
                                    _bilinear_channel(b, new_w, new_h))
    return out


def blend(dst, src, alpha):
    """dst = (src*alpha + dst*(256-alpha)) >> 8, per raw channel."""
    if dst.width != src.width or dst.height != src.height or dst.format is not src.format:
        raise DimensionMismatch("blend requires matching dimensions and format")
    if not 0 <= alpha <= 256:
        raise ValueError("alpha must be in 0..256")
    if dst.format is PixelFormat.GRAYSCALE8:
        d = dst.pixels.astype(np.int64)
        s = src.pixels.astype(np.int64)
        dst.pixels[:] = ((s * alpha + d * (256 - alpha)) >> 8).astype(np.uint8)
    else:
        dr, dg, db = unpack565(dst.pixels)
        sr, sg, sb = unpack565(src.pixels)
        mix = lambda s, d: (s * alpha + d * (256 - alpha)) >> 8
        dst.pixels[:] = pack565(mix(sr, dr), mix(sg, dg), mix(sb, db))
    return dst


# ---------------------------------------------------------------------------
# Drawing primitives

class Line:
    def __init__(self, x0, y0, x1, y1, color):
        self.x0, self.y0, self.x1, self.y1 = x0, y0, x1, y1
        self.color = color


class Rect:
    def __init__(self, x, y, w, h, color, filled=False):
        self.x, self.y, self.w, self.h = x, y, w, h
        self.color = color
        self.filled = filled


class Circle:
    def __init__(self, cx, cy, r, color, filled=False):
        if r < 0:
            raise ValueError("circle radius must be >= 0")
        self.cx, self.cy, self.r = cx, cy, r
        self.color = color
        self.filled = filled


class Text:
    def __init__(self, x, y, text, color):
        self.x, self.y = x, y
        self.text = text
        self.color = color


def _put(img, x, y, color):
    if 0 <= x < img.width and 0 <= y < img.height:
        img.pixels[y, x] = color


def _hspan(img, x0, x1, y, color):
    if y < 0 or y >= img.height:
        return
    lo = max(min(x0, x1), 0)
    hi = min(max(x0, x1), img.width - 1)
    if lo <= hi:
        img.pixels[y, lo:hi + 1] = color


def _draw_line(img, x0, y0, x1, y1, color):
    dx = abs(x1 - x0)
    dy = -abs(y1 - y0)
    sx = 1 if x0 < x1 else -1
    sy = 1 if y0 < y1 else -1
    err = dx + dy
    while True:
        _put(img, x0, y0, color)
        if x0 == x1 and y0 == y1:
            break
        e2 = 2 * err
        if e2 >= dy:
            err += dy
            x0 += sx
        if e2 <= dx:
            err += dx
            y0 += sy


def _draw_rect(img, x, y, w, h, color, filled):
    if w <= 0 or h <= 0:
        return
    if filled:
        for yy in range(y, y + h):
            _hspan(img, x, x + w - 1, yy, color)
    else:
        _hspan(img, x, x + w - 1, y, color)
        _hspan(img, x, x + w - 1, y + h - 1, color)
        for yy in range(y + 1, y + h - 1):
            _put(img, x, yy, color)
            _put(img, x + w - 1, yy, color)


def _draw_circle(img, cx, cy, r, color, filled):
    if r == 0:
        _put(img, cx, cy, color)
        return
    x, y, err = r, 0, 1 - r
    while x >= y:
        if filled:
            _hspan(img, cx - x, cx + x, cy + y, color)
            _hspan(img, cx - x, cx + x, cy - y, color)
            _hspan(img, cx - y, cx + y, cy + x, color)
            _hspan(img, cx - y, cx + y, cy - x, color)
        else:
            for px, py in ((x, y), (y, x), (-x, y), (-y, x),
                           (x, -y), (y, -x), (-x, -y), (-y, -x)):
                _put(img, cx + px, cy + py, color)
        y += 1
        if err < 0:
            err += 2 * y + 1
        else:
            x -= 1
            err += 2 * (y - x) + 1


def _draw_text(img, x, y, text, color):
    # Glyphs advance 8 px; anything outside printable ASCII renders as '?'.
    for ch in text:
        rows = glyph_rows(ch)
        for dy in range(8):
            bits = rows[dy]
            for dx in range(8):
                if bits & (0x80 >> dx):
                    _put(img, x + dx, y + dy, color)
        x += 8


def draw(img, primitive):
    """Render one primitive onto the image; fully clipped draws are no-ops."""
    if isinstance(primitive, Line):
        _draw_line(img, primitive.x0, primitive.y0, primitive.x1, primitive.y1,
                   primitive.color)
    elif isinstance(primitive, Rect):
        _draw_rect(img, primitive.x, primitive.y, primitive.w, primitive.h,
                   primitive.color, primitive.filled)
    elif isinstance(primitive, Circle):
        _draw_circle(img, primitive.cx, primitive.cy, primitive.r,
                     primitive.color, primitive.filled)
    elif isinstance(primitive, Text):
        _draw_text(img, primitive.x, primitive.y, primitive.text, primitive.color)
    else:
        raise TypeError("unknown primitive %r" % (primitive,))
    return img


# ---------------------------------------------------------------------------
# Pixel access and statistics

def get_pixel(img, x, y):
    return img.get(x, y)


def set_pixel(img, x, y, value):
    img.set(x, y, value)


def _mean_half_up(total, count):
    return (2 * total + count) // (2 * count)


def stats(img):
    """(min, max, mean, histogram); per-channel tuples for RGB565.

    Gray histograms have 256 bins; RGB565 uses raw channel bins (32/64/32).
    Means are exact rationals rounded half-up.
    """
    if img.format is PixelFormat.GRAYSCALE8:
        px = img.pixels
        hist = np.bincount(px.ravel(), minlength=256)
        total = int(px.sum(dtype=np.int64))
        return (int(px.min()), int(px.max()),
                _mean_half_up(total, px.size), hist.tolist())
    r, g, b = unpack565(img.pixels)
    mins, maxs, means, hists = [], [], [], []
    for ch, bins in ((r, 32), (g, 64), (b, 32)):
        hists.append(np.bincount(ch.ravel(), minlength=bins).tolist())
        mins.append(int(ch.min()))
        maxs.append(int(ch.max()))
        means.append(_mean_half_up(int(ch.sum()), ch.size))
    return (tuple(mins), tuple(maxs), tuple(means), tuple(hists))


# ---------------------------------------------------------------------------
# Filters (GRAYSCALE8 only)

def _check_gray(img):
    if img.format is not PixelFormat.GRAYSCALE8:
        raise WrongFormat("filter requires GRAYSCALE8 input")


def _neighborhoods(px, ksize):
    pad = ksize // 2
    padded = np.pad(px, pad, mode="edge")
    win = np.lib.stride_tricks.sliding_window_view(padded, (ksize, ksize))
    return win.reshape(px.shape[0], px.shape[1], ksize * ksize)


def median_filter(img, ksize, arena):
    _check_gray(img)
    if ksize < 3 or ksize % 2 == 0:
        raise BadKernelSize("kernel size must be odd and >= 3")
    out = Image(arena, img.width, img.height, img.format)
    hoods = np.sort(_neighborhoods(img.pixels, ksize), axis=2)
    out.pixels[:] = hoods[:, :, (ksize * ksize) // 2]
    return out


def midpoint_filter(img, ksize, arena):
    _check_gray(img)
    if ksize < 3 or ksize % 2 == 0:
        raise BadKernelSize("kernel size must be odd and >= 3")
    out = Image(arena, img.width, img.height, img.format)
    hoods = _neighborhoods(img.pixels, ksize).astype(np.int64)
    out.pixels[:] = ((hoods.min(axis=2) + hoods.max(axis=2)) // 2).astype(np.uint8)
    return out


def gaussian_kernel(ksize):
    """Integer 1-D kernel: continuous samples quantized to sum exactly 256."""
    sigma = 0.3 * ((ksize - 1) * 0.5 - 1) + 0.8
    c = ksize // 2
    g = [math.exp(-((i - c) ** 2) / (2 * sigma * sigma)) for i in range(ksize)]
    total = sum(g)
    w = [int((256 * gi / total) + 0.5) for gi in g]
    w[c] += 256 - sum(w)
    return w


def _conv1d_fixed(px, weights, axis):
    # One separable pass: out = (sum(w*p) + 128) >> 8, replicate borders.
    k = len(weights)
    pad = k // 2
    widths = [(0, 0), (0, 0)]
    widths[axis] = (pad, pad)
    padded = np.pad(px.astype(np.int64), widths, mode="edge")
    acc = np.zeros(px.shape, dtype=np.int64)
    for i, w in enumerate(weights):
        if axis == 0:
            acc += w * padded[i:i + px.shape[0], :]
        else:
            acc += w * padded[:, i:i + px.shape[1]]
    return (acc + 128) >> 8


def gaussian_blur(img, ksize, arena):
    _check_gray(img)
    if ksize not in (3, 5, 7):
        raise BadKernelSize("gaussian kernel size must be 3, 5 or 7")
    weights = gaussian_kernel(ksize)
    tmp = _conv1d_fixed(img.pixels, weights, axis=1)
    out_px = _conv1d_fixed(tmp, weights, axis=0)
    out = Image(arena, img.width, img.height, img.format)
    out.pixels[:] = np.clip(out_px, 0, 255).astype(np.uint8)
    return out


def hist_eq(img):
    """In-place equalization: v -> round(255*(cdf(v)-cdf_min)/(N-cdf_min)),
    cdf_min the smallest nonzero cdf value; constant images are unchanged."""
    _check_gray(img)
    px = img.pixels
    hist = np.bincount(px.ravel(), minlength=256).astype(np.int64)
    cdf = np.cumsum(hist)
    n = px.size
    nonzero = cdf[cdf > 0]
    cdf_min = int(nonzero[0])
    if cdf_min == n:
        return img
    den = n - cdf_min
    lut = (2 * 255 * (cdf - cdf_min) + den) // (2 * den)
    lut = np.clip(lut, 0, 255).astype(np.uint8)
    px[:] = lut[px]
    return img

"""Staged Haar cascade: text-format loader and sliding-window detector.

The detector scans windows at a pyramid of scales, normalizes each window
by its standard deviation (computed from integral and squared-integral
tables), and merges raw hits by grouping rectangles with pairwise IoU of
at least 0.5.
"""

import math

from ..errors import BadCascade, ImageSmallerThanWindow, WrongFormat
from ..membuf import PixelFormat, integral_image, rect_sqsum, rect_sum

FIXED_ONE = 65536  # 16.16 fixed point
MIN_VARIANCE = 1e-4


class HaarRect:
    __slots__ = ("x", "y", "w", "h", "weight")

    def __init__(self, x, y, w, h, weight):
        self.x = x
        self.y = y
        self.w = w
        self.h = h
        self.weight = weight


class Stump:
    __slots__ = ("rects", "threshold", "pass_value", "fail_value")

    def __init__(self, rects, threshold, pass_value, fail_value):
        self.rects = rects
        self.threshold = threshold
        self.pass_value = pass_value
        self.fail_value = fail_value


class Stage:
    __slots__ = ("threshold", "stumps")

    def __init__(self, threshold, stumps):
        self.threshold = threshold
        self.stumps = stumps


class Cascade:
    __slots__ = ("window_w", "window_h", "stages")

    def __init__(self, window_w, window_h, stages):
        self.window_w = window_w
        self.window_h = window_h
        self.stages = stages


class Detection:
    __slots__ = ("x", "y", "w", "h", "score")

    def __init__(self, x, y, w, h, score):
        self.x = x
        self.y = y
        self.w = w
        self.h = h
        self.score = score

    def __repr__(self):
        return "Detection(x=%d, y=%d, w=%d, h=%d, score=%.4f)" % (
            self.x, self.y, self.w, self.h, self.score)


def _tokens(text):
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0]
        for tok in body.split():
            yield lineno, tok


class _TokenReader:
    def __init__(self, text):
        self._it = _tokens(text)
        self.lineno = 0

    def word(self):
        try:
            self.lineno, tok = next(self._it)
        except StopIteration:
            raise BadCascade("cascade file ended early") from None
        return tok

    def expect(self, keyword):
        tok = self.word()
        if tok != keyword:
            raise BadCascade("line %d: expected %r, got %r"
                             % (self.lineno, keyword, tok))

    def integer(self):
        tok = self.word()
        try:
            return int(tok)
        except ValueError:
            raise BadCascade("line %d: expected integer, got %r"
                             % (self.lineno, tok)) from None

    def fixed(self):
        return self.integer() / FIXED_ONE

    def done(self):
        try:
            self.lineno, tok = next(self._it)
        except StopIteration:
            return
        raise BadCascade("line %d: trailing token %r" % (self.lineno, tok))


def load_cascade(text):
    """Parse the line-oriented cascade text format."""
    r = _TokenReader(text)
    r.expect("cascade")
    window_w = r.integer()
    window_h = r.integer()
    nstages = r.integer()
    if window_w < 1 or window_h < 1:
        raise BadCascade("bad cascade window %dx%d" % (window_w, window_h))
    if nstages < 1:
        raise BadCascade("cascade needs at least one stage")
    stages = []
    for _ in range(nstages):
        r.expect("stage")
        nstumps = r.integer()
        if nstumps < 1:
            raise BadCascade("line %d: stage needs at least one stump"
                             % r.lineno)
        stage_threshold = r.fixed()
        stumps = []
        for _ in range(nstumps):
            r.expect("stump")
            nrects = r.integer()
            if nrects < 1:
                raise BadCascade("line %d: stump needs at least one rect"
                                 % r.lineno)
            threshold = r.fixed()
            pass_value = r.fixed()
            fail_value = r.fixed()
            rects = []
            for _ in range(nrects):
                r.expect("rect")
                x, y, w, h = (r.integer() for _ in range(4))
                weight = r.fixed()
                if w < 1 or h < 1 or x < 0 or y < 0 \
                        or x + w > window_w or y + h > window_h:
                    raise BadCascade("line %d: rect outside window" % r.lineno)
                rects.append(HaarRect(x, y, w, h, weight))
            stumps.append(Stump(rects, threshold, pass_value, fail_value))
        stages.append(Stage(stage_threshold, stumps))
    r.done()
    return Cascade(window_w, window_h, stages)


def _scale_round(v, s):
    return int(math.floor(v * s + 0.5))


class _ScaledCascade:
    """Cascade geometry rounded to one pyramid scale."""

    __slots__ = ("win_w", "win_h", "stages")

    def __init__(self, cascade, s):
        self.win_w = _scale_round(cascade.window_w, s)
        self.win_h = _scale_round(cascade.window_h, s)
        self.stages = []
        for stage in cascade.stages:
            stumps = []
            for stump in stage.stumps:
                rects = []
                for r in stump.rects:
                    x = min(_scale_round(r.x, s), self.win_w - 1)
                    y = min(_scale_round(r.y, s), self.win_h - 1)
                    w = min(_scale_round(r.w, s), self.win_w - x)
                    h = min(_scale_round(r.h, s), self.win_h - y)
                    if w >= 1 and h >= 1:
                        rects.append((x, y, w, h, r.weight))
                stumps.append((rects, stump.threshold,
                               stump.pass_value, stump.fail_value))
            self.stages.append((stage.threshold, stumps))


def evaluate_window(scaled, wx, wy, rsum, rsqsum):
    """Run every stage at window position (wx, wy).

    rsum/rsqsum are rectangle-sum callables taking absolute image
    coordinates; the integral-table path and a direct per-pixel path plug
    in here and otherwise share every arithmetic step, so their results
    agree exactly. Returns the accumulated stage margin, or None if the
    window is rejected.
    """
    n = scaled.win_w * scaled.win_h
    total = rsum(wx, wy, scaled.win_w, scaled.win_h)
    sq_total = rsqsum(wx, wy, scaled.win_w, scaled.win_h)
    mean = total / n
    variance = sq_total / n - mean * mean
    if variance < MIN_VARIANCE:
        return None
    std = math.sqrt(variance)
    margin = 0.0
    for stage_threshold, stumps in scaled.stages:
        stage_sum = 0.0
        for rects, threshold, pass_value, fail_value in stumps:
            acc = 0.0
            for x, y, w, h, weight in rects:
                acc += weight * rsum(wx + x, wy + y, w, h)
            f = acc / (n * std)
            stage_sum += pass_value if f >= threshold else fail_value
        if stage_sum < stage_threshold:
            return None
        margin += stage_sum - stage_threshold
    return margin


def _iou(a, b):
    ix = max(a.x, b.x)
    iy = max(a.y, b.y)
    ix2 = min(a.x + a.w, b.x + b.w)
    iy2 = min(a.y + a.h, b.y + b.h)
    iw = max(0, ix2 - ix)
    ih = max(0, iy2 - iy)
    inter = iw * ih
    union = a.w * a.h + b.w * b.h - inter
    return inter / union if union else 0.0


def group_detections(hits, min_neighbors, img_w, img_h):
    """Merge raw hits: connected components under IoU >= 0.5, keep groups
    of at least min_neighbors, return the averaged rectangle per group."""
    n = len(hits)
    assigned = [False] * n
    merged = []
    for i in range(n):
        if assigned[i]:
            continue
        group = [i]
        assigned[i] = True
        queue = [i]
        while queue:
            a = queue.pop()
            for j in range(n):
                if not assigned[j] and _iou(hits[a], hits[j]) >= 0.5:
                    assigned[j] = True
                    group.append(j)
                    queue.append(j)
        if len(group) < min_neighbors:
            continue
        xs = sum(hits[k].x for k in group) / len(group)
        ys = sum(hits[k].y for k in group) / len(group)
        ws = sum(hits[k].w for k in group) / len(group)
        hs = sum(hits[k].h for k in group) / len(group)
        score = sum(hits[k].score for k in group) / len(group)
        x = int(math.floor(xs + 0.5))
        y = int(math.floor(ys + 0.5))
        w = min(int(math.floor(ws + 0.5)), img_w - x)
        h = min(int(math.floor(hs + 0.5)), img_h - y)
        merged.append(Detection(x, y, w, h, score))
    return merged


def scan_windows(img_w, img_h, cascade, scale_factor, step, rsum, rsqsum):
    """Raw (ungrouped) hits from the full pyramid scan."""
    hits = []
    s = 1.0
    while True:
        scaled = _ScaledCascade(cascade, s)
        if scaled.win_w > img_w or scaled.win_h > img_h:
            break
        for wy in range(0, img_h - scaled.win_h + 1, step):
            for wx in range(0, img_w - scaled.win_w + 1, step):
                margin = evaluate_window(scaled, wx, wy, rsum, rsqsum)
                if margin is not None:
                    hits.append(Detection(wx, wy, scaled.win_w,
                                          scaled.win_h, margin))
        s *= scale_factor
    return hits


def haar_detect(img, cascade, scale_factor=1.25, step=2, min_neighbors=3):
    """Detect cascade hits in a GRAYSCALE8 image; returns merged rects."""
    if img.format is not PixelFormat.GRAYSCALE8:
        raise WrongFormat("haar_detect expects GRAYSCALE8")
    if img.width < cascade.window_w or img.height < cascade.window_h:
        raise ImageSmallerThanWindow(
            "image %dx%d smaller than cascade window %dx%d"
            % (img.width, img.height, cascade.window_w, cascade.window_h))
    tables = integral_image(img, with_squares=True)
    try:
        rsum = lambda x, y, w, h: rect_sum(tables, x, y, w, h)
        rsqsum = lambda x, y, w, h: rect_sqsum(tables, x, y, w, h)
        hits = scan_windows(img.width, img.height, cascade,
                            scale_factor, step, rsum, rsqsum)
    finally:
        tables.free()
    return group_detections(hits, min_neighbors, img.width, img.height)

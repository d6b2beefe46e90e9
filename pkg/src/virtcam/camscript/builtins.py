"""Builtin bindings the interpreter hands to scripts.

Memory model: images returned by derived operations are owned by the
script and tracked in allocation order. Rebinding the last name that
holds one frees it, deferred if something younger is still live so the
arena's LIFO rule is never violated; everything left over is released
when the script exits. The sensor's frame buffer itself is not owned by
scripts, snapshot() just hands out references to it.
"""

import os

from .. import imgproc
from ..errors import (BadValue, FileError, ScriptTypeError,
                      UnsupportedFormat)
from ..features import (fast_detect, find_eye_center, haar_detect,
                        hough_lines, load_cascade, match_descriptors,
                        ncc_match_ds, ncc_match_exhaustive, optical_flow,
                        orb_describe, to_grayscale)
from ..features.canny import canny
from ..imgio import write_image
from ..sensor import FRAMESIZES

_SAVE_FORMATS = {".pgm": "pgm", ".ppm": "ppm", ".bmp": "bmp",
                 ".jpg": "jpeg", ".jpeg": "jpeg"}


class ScriptModule:
    __slots__ = ("name", "attrs")

    def __init__(self, name, attrs):
        self.name = name
        self.attrs = attrs

    def __repr__(self):
        return "<module %s>" % self.name


class Builtin:
    """A callable value; fn receives the evaluated argument list."""
    __slots__ = ("name", "fn")

    def __init__(self, name, fn):
        self.name = name
        self.fn = fn

    def __repr__(self):
        return "<builtin %s>" % self.name


class ImageRef:
    __slots__ = ("img", "owned", "dead", "freed")

    def __init__(self, img, owned):
        self.img = img
        self.owned = owned
        self.dead = False
        self.freed = False

    def __repr__(self):
        return "<image %dx%d %s>" % (self.img.width, self.img.height,
                                     self.img.format.name)


class KeypointSet:
    __slots__ = ("keypoints",)

    def __init__(self, keypoints):
        self.keypoints = keypoints

    def __len__(self):
        return len(self.keypoints)

    def __repr__(self):
        return "<keypoints %d>" % len(self.keypoints)


class Runtime:
    """Shared state behind one script execution."""

    def __init__(self, sensor, arena, on_print=None, on_frame=None):
        self.sensor = sensor
        self.arena = arena
        self.on_print = on_print
        self.on_frame = on_frame
        self.prints = []
        self.clock_ms = 0
        self.registry = []
        self.cascades = {}
        self._had_buffer = sensor._buffer is not None

    def emit(self, text):
        self.prints.append(text)
        if self.on_print is not None:
            self.on_print(text)

    def adopt(self, img):
        """Wrap a freshly allocated image as a script-owned value."""
        ref = ImageRef(img, owned=True)
        self.registry.append(ref)
        return ref

    def kill(self, ref):
        ref.dead = True
        self.sweep()

    def sweep(self):
        while self.registry and self.registry[-1].dead:
            ref = self.registry.pop()
            if not ref.freed:
                ref.img.free()
                ref.freed = True

    def release_all(self):
        for ref in reversed(self.registry):
            if not ref.freed:
                ref.img.free()
                ref.freed = True
        self.registry = []
        if not self._had_buffer:
            self.sensor.release()


def _count(args, low, high, what):
    if not low <= len(args) <= high:
        raise ScriptTypeError("%s takes %s arguments, got %d"
                              % (what, low if low == high
                                 else "%d to %d" % (low, high), len(args)))


def _int_arg(value, what):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScriptTypeError("%s must be a number" % what)
    return int(value)


def _image_arg(value, what):
    if not isinstance(value, ImageRef):
        raise ScriptTypeError("%s must be an image" % what)
    return value.img


def _quad(args, what):
    """Accept either four numbers or one 4-tuple/list."""
    if len(args) == 1 and isinstance(args[0], (tuple, list)):
        args = list(args[0])
    if len(args) != 4:
        raise ScriptTypeError("%s takes (x, y, w, h)" % what)
    return tuple(_int_arg(a, what) for a in args)


def make_image_methods():
    """Name -> fn(rt, ref, args) table for ImageRef attribute lookup."""

    def width(rt, ref, args):
        _count(args, 0, 0, "width")
        return ref.img.width

    def height(rt, ref, args):
        _count(args, 0, 0, "height")
        return ref.img.height

    def get_pixel(rt, ref, args):
        _count(args, 2, 2, "get_pixel")
        return imgproc.get_pixel(ref.img, _int_arg(args[0], "x"),
                                 _int_arg(args[1], "y"))

    def set_pixel(rt, ref, args):
        _count(args, 3, 3, "set_pixel")
        imgproc.set_pixel(ref.img, _int_arg(args[0], "x"),
                          _int_arg(args[1], "y"), _int_arg(args[2], "value"))
        return None

    def crop(rt, ref, args):
        x, y, w, h = _quad(args, "crop")
        return rt.adopt(imgproc.crop(ref.img, x, y, w, h, rt.arena))

    def scale_(rt, ref, args):
        _count(args, 2, 3, "scale")
        method = "nearest"
        if len(args) == 3:
            if not isinstance(args[2], str):
                raise ScriptTypeError("scale method must be a string")
            method = args[2]
        return rt.adopt(imgproc.scale(ref.img, _int_arg(args[0], "width"),
                                      _int_arg(args[1], "height"),
                                      method, rt.arena))

    def blend(rt, ref, args):
        _count(args, 2, 2, "blend")
        other = _image_arg(args[0], "blend source")
        imgproc.blend(ref.img, other, _int_arg(args[1], "alpha"))
        return ref

    def draw_line(rt, ref, args):
        _count(args, 5, 5, "draw_line")
        coords = [_int_arg(a, "draw_line") for a in args]
        imgproc.draw(ref.img, imgproc.Line(*coords))
        return ref

    def draw_rectangle(rt, ref, args):
        _count(args, 5, 6, "draw_rectangle")
        coords = [_int_arg(a, "draw_rectangle") for a in args[:5]]
        filled = bool(args[5]) if len(args) == 6 else False
        imgproc.draw(ref.img, imgproc.Rect(*coords, filled=filled))
        return ref

    def draw_circle(rt, ref, args):
        _count(args, 4, 5, "draw_circle")
        coords = [_int_arg(a, "draw_circle") for a in args[:4]]
        filled = bool(args[4]) if len(args) == 5 else False
        imgproc.draw(ref.img, imgproc.Circle(*coords, filled=filled))
        return ref

    def draw_string(rt, ref, args):
        _count(args, 4, 4, "draw_string")
        if not isinstance(args[2], str):
            raise ScriptTypeError("draw_string text must be a string")
        imgproc.draw(ref.img, imgproc.Text(_int_arg(args[0], "x"),
                                           _int_arg(args[1], "y"),
                                           args[2],
                                           _int_arg(args[3], "value")))
        return ref

    def median(rt, ref, args):
        _count(args, 1, 1, "median")
        return rt.adopt(imgproc.median_filter(
            ref.img, _int_arg(args[0], "kernel size"), rt.arena))

    def midpoint(rt, ref, args):
        _count(args, 1, 1, "midpoint")
        return rt.adopt(imgproc.midpoint_filter(
            ref.img, _int_arg(args[0], "kernel size"), rt.arena))

    def gaussian(rt, ref, args):
        _count(args, 1, 1, "gaussian")
        return rt.adopt(imgproc.gaussian_blur(
            ref.img, _int_arg(args[0], "kernel size"), rt.arena))

    def histeq(rt, ref, args):
        _count(args, 0, 0, "histeq")
        imgproc.hist_eq(ref.img)
        return ref

    def find_features(rt, ref, args):
        _count(args, 1, 1, "find_features")
        if not isinstance(args[0], str):
            raise ScriptTypeError("find_features takes a cascade path")
        path = os.path.abspath(args[0])
        cascade = rt.cascades.get(path)
        if cascade is None:
            try:
                with open(path, "r", encoding="utf-8") as fh:
                    cascade = load_cascade(fh.read())
            except OSError as exc:
                raise FileError("cannot read cascade: %s" % exc) from None
            rt.cascades[path] = cascade
        hits = haar_detect(ref.img, cascade)
        return [(d.x, d.y, d.w, d.h, d.score) for d in hits]

    def find_eye(rt, ref, args):
        roi = _quad(args, "find_eye_center")
        return find_eye_center(ref.img, roi)

    def find_keypoints(rt, ref, args):
        _count(args, 1, 1, "find_keypoints")
        corners = fast_detect(ref.img, _int_arg(args[0], "threshold"))
        return KeypointSet(orb_describe(ref.img, corners))

    def match(rt, ref, args):
        _count(args, 2, 2, "match")
        a, b = args
        if not isinstance(a, KeypointSet) or not isinstance(b, KeypointSet):
            raise ScriptTypeError("match takes two keypoint sets")
        pairs = match_descriptors(a.keypoints, b.keypoints)
        return [tuple(p) for p in pairs]

    def find_template(rt, ref, args):
        _count(args, 1, 1, "find_template")
        tmpl = _image_arg(args[0], "template")
        return ncc_match_exhaustive(ref.img, tmpl)

    def find_template_ds(rt, ref, args):
        _count(args, 3, 3, "find_template_ds")
        tmpl = _image_arg(args[0], "template")
        start = (_int_arg(args[1], "x"), _int_arg(args[2], "y"))
        return ncc_match_ds(ref.img, tmpl, start, refine=True)

    def find_displacement(rt, ref, args):
        _count(args, 1, 2, "find_displacement")
        prev = _image_arg(args[0], "previous frame")
        radius = _int_arg(args[1], "radius") if len(args) == 2 else 8
        mv = optical_flow(prev, ref.img, radius)
        return (mv.dx, mv.dy, mv.response)

    def canny_(rt, ref, args):
        _count(args, 2, 2, "canny")
        return rt.adopt(canny(ref.img, _int_arg(args[0], "low threshold"),
                              _int_arg(args[1], "high threshold"), rt.arena))

    def find_lines(rt, ref, args):
        _count(args, 1, 1, "find_lines")
        hits = hough_lines(ref.img, _int_arg(args[0], "threshold"))
        return [tuple(h) for h in hits]

    def to_grayscale_(rt, ref, args):
        _count(args, 0, 0, "to_grayscale")
        return rt.adopt(to_grayscale(ref.img, rt.arena))

    def save(rt, ref, args):
        _count(args, 1, 2, "save")
        if not isinstance(args[0], str):
            raise ScriptTypeError("save takes a path string")
        path = args[0]
        ext = os.path.splitext(path)[1].lower()
        fmt = _SAVE_FORMATS.get(ext)
        if fmt is None:
            raise UnsupportedFormat("cannot save %r files" % ext)
        quality = _int_arg(args[1], "quality") if len(args) == 2 else 90
        data = write_image(ref.img, fmt, quality=quality)
        try:
            with open(path, "wb") as fh:
                fh.write(data)
        except OSError as exc:
            raise FileError("cannot write %s: %s" % (path, exc)) from None
        return None

    return {
        "width": width, "height": height,
        "get_pixel": get_pixel, "set_pixel": set_pixel,
        "crop": crop, "scale": scale_, "blend": blend,
        "draw_line": draw_line, "draw_rectangle": draw_rectangle,
        "draw_circle": draw_circle, "draw_string": draw_string,
        "median": median, "midpoint": midpoint, "gaussian": gaussian,
        "histeq": histeq,
        "find_features": find_features, "find_eye_center": find_eye,
        "find_keypoints": find_keypoints, "match": match,
        "find_template": find_template, "find_template_ds": find_template_ds,
        "find_displacement": find_displacement,
        "canny": canny_, "find_lines": find_lines,
        "to_grayscale": to_grayscale_, "save": save,
    }


IMAGE_METHODS = make_image_methods()


def _sensor_module(rt):
    sensor = rt.sensor

    def reset(args):
        _count(args, 0, 0, "sensor.reset")
        sensor.reset()
        return None

    def set_pixformat(args):
        _count(args, 1, 1, "sensor.set_pixformat")
        sensor.config.set("pixformat", args[0])
        return None

    def set_framesize(args):
        _count(args, 1, 1, "sensor.set_framesize")
        value = args[0]
        if isinstance(value, list):
            value = tuple(value)
        sensor.config.set("framesize", value)
        return None

    def set_windowing(args):
        if len(args) == 1 and args[0] is None:
            sensor.config.set("window", None)
        else:
            sensor.config.set("window", _quad(args, "sensor.set_windowing"))
        return None

    def set_led(args):
        _count(args, 2, 2, "sensor.set_led")
        if not isinstance(args[0], str):
            raise ScriptTypeError("led name must be a string")
        sensor.config.set("led." + args[0], bool(args[1]))
        return None

    def snapshot(args):
        _count(args, 0, 0, "sensor.snapshot")
        img = sensor.snapshot()
        if rt.on_frame is not None:
            rt.on_frame(img)
        return ImageRef(img, owned=False)

    attrs = {
        "reset": Builtin("sensor.reset", reset),
        "set_pixformat": Builtin("sensor.set_pixformat", set_pixformat),
        "set_framesize": Builtin("sensor.set_framesize", set_framesize),
        "set_windowing": Builtin("sensor.set_windowing", set_windowing),
        "set_led": Builtin("sensor.set_led", set_led),
        "snapshot": Builtin("sensor.snapshot", snapshot),
        "GRAYSCALE8": "GRAYSCALE8",
        "RGB565": "RGB565",
    }
    for name in FRAMESIZES:
        attrs[name] = name
    return ScriptModule("sensor", attrs)


def _time_module(rt):
    def ticks_ms(args):
        _count(args, 0, 0, "time.ticks_ms")
        return rt.clock_ms

    def sleep_ms(args):
        _count(args, 1, 1, "time.sleep_ms")
        ms = _int_arg(args[0], "milliseconds")
        if ms < 0:
            raise BadValue("sleep_ms takes a non-negative duration")
        rt.clock_ms += ms
        return None

    return ScriptModule("time", {
        "ticks_ms": Builtin("time.ticks_ms", ticks_ms),
        "sleep_ms": Builtin("time.sleep_ms", sleep_ms),
    })


def _image_module(rt):
    return ScriptModule("image", {
        "NEAREST": "nearest",
        "BILINEAR": "bilinear",
    })


def _stringify(value):
    if isinstance(value, str):
        return value
    if value is None:
        return "None"
    return repr(value) if isinstance(value, float) else str(value)


def builtin_bindings(sensor, arena, on_print=None, on_frame=None):
    """Fresh globals for one script run, plus the runtime behind them."""
    rt = Runtime(sensor, arena, on_print, on_frame)
    modules = {
        "sensor": _sensor_module(rt),
        "image": _image_module(rt),
        "time": _time_module(rt),
    }

    def print_(args):
        rt.emit(" ".join(_stringify(a) for a in args))
        return None

    def range_(args):
        _count(args, 1, 3, "range")
        vals = [_int_arg(a, "range") for a in args]
        return range(*vals)

    def len_(args):
        _count(args, 1, 1, "len")
        v = args[0]
        if isinstance(v, (str, tuple, list, range, KeypointSet)):
            return len(v)
        raise ScriptTypeError("len takes a sequence")

    def abs_(args):
        _count(args, 1, 1, "abs")
        v = args[0]
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ScriptTypeError("abs takes a number")
        return abs(v)

    env = {
        "print": Builtin("print", print_),
        "range": Builtin("range", range_),
        "len": Builtin("len", len_),
        "abs": Builtin("abs", abs_),
    }
    return env, modules, rt

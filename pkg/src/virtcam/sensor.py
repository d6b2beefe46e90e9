"""Virtual image sensor: framing controls, test-pattern and file sources.

The pipeline per snapshot: produce the source frame, apply the optional
window crop at the native 640x480 array size, scale to the configured
framesize (nearest neighbor), mirror/flip, apply contrast then brightness
with saturation, and convert to the configured pixel format. Pattern
sources without a window render directly at the output size, so their
defining formulas hold in output coordinates.

Patterns: gradient (static horizontal ramp), checker (static 16 px
squares), noise (per-frame seeded uniform), line (vertical line stepping
2 px per frame), disk (bright disk orbiting the center). All are
deterministic functions of (name, seed, frame_index).
"""

import math
import os

import numpy as np

from .errors import BadValue, FileError, SourceExhausted
from .imgio import read_image
from .membuf import Arena, Image, PixelFormat

NATIVE_W, NATIVE_H = 640, 480
FRAMESIZES = {
    "QQVGA": (160, 120),
    "QVGA": (320, 240),
    "VGA": (640, 480),
}
MIN_WINDOW = 8
PATTERN_NAMES = ("gradient", "checker", "noise", "line", "disk")
LED_NAMES = ("red", "green", "blue", "ir")

_FILE_EXTS = (".pgm", ".ppm", ".bmp")


class SensorConfig:
    """Mutable sensor state; fields validated through set()."""

    def __init__(self):
        self.framesize = "QVGA"
        self.pixformat = PixelFormat.GRAYSCALE8
        self.window = None
        self.hmirror = False
        self.vflip = False
        self.brightness = 0
        self.contrast = 256
        self.leds = {name: False for name in LED_NAMES}

    def frame_dims(self):
        if isinstance(self.framesize, tuple):
            return self.framesize
        return FRAMESIZES[self.framesize]

    def set(self, field, value):
        if field == "framesize":
            if isinstance(value, str):
                if value not in FRAMESIZES:
                    raise BadValue("unknown framesize %r" % value)
                self.framesize = value
            else:
                try:
                    w, h = (int(v) for v in value)
                except (TypeError, ValueError):
                    raise BadValue("framesize must be a preset name or (w, h)") \
                        from None
                if not (MIN_WINDOW <= w <= NATIVE_W
                        and MIN_WINDOW <= h <= NATIVE_H):
                    raise BadValue("custom framesize %dx%d out of range" % (w, h))
                self.framesize = (w, h)
        elif field == "pixformat":
            if isinstance(value, str):
                try:
                    value = PixelFormat[value]
                except KeyError:
                    raise BadValue("unknown pixformat %r" % value) from None
            if not isinstance(value, PixelFormat):
                raise BadValue("bad pixformat")
            self.pixformat = value
        elif field == "window":
            if value is None:
                self.window = None
                return
            try:
                x, y, w, h = (int(v) for v in value)
            except (TypeError, ValueError):
                raise BadValue("window must be (x, y, w, h) or None") from None
            if w < MIN_WINDOW or h < MIN_WINDOW:
                raise BadValue("window below %dx%d minimum"
                               % (MIN_WINDOW, MIN_WINDOW))
            if x < 0 or y < 0 or x + w > NATIVE_W or y + h > NATIVE_H:
                raise BadValue("window outside the %dx%d native array"
                               % (NATIVE_W, NATIVE_H))
            self.window = (x, y, w, h)
        elif field in ("hmirror", "vflip"):
            setattr(self, field, bool(value))
        elif field == "brightness":
            v = int(value)
            if not -128 <= v <= 127:
                raise BadValue("brightness out of range -128..127")
            self.brightness = v
        elif field == "contrast":
            v = int(value)
            if not 0 <= v <= 1024:
                raise BadValue("contrast out of range 0..1024")
            self.contrast = v
        elif field.startswith("led."):
            name = field[4:]
            if name not in self.leds:
                raise BadValue("unknown led %r" % name)
            self.leds[name] = bool(value)
        else:
            raise BadValue("unknown sensor field %r" % field)

    def get(self, field):
        if field == "framesize":
            return self.framesize
        if field == "pixformat":
            return self.pixformat
        if field == "window":
            return self.window
        if field in ("hmirror", "vflip", "brightness", "contrast"):
            return getattr(self, field)
        if field.startswith("led."):
            name = field[4:]
            if name in self.leds:
                return self.leds[name]
        raise BadValue("unknown sensor field %r" % field)


def render_pattern(name, seed, frame_index, w, h):
    """One grayscale pattern frame at the requested size."""
    if name == "gradient":
        if w > 1:
            row = (np.arange(w, dtype=np.int64) * 255 // (w - 1))
        else:
            row = np.zeros(1, dtype=np.int64)
        return np.tile(row.astype(np.uint8), (h, 1))
    if name == "checker":
        yy, xx = np.mgrid[0:h, 0:w]
        return np.where((xx // 16 + yy // 16) % 2 == 0, 0, 255).astype(np.uint8)
    if name == "noise":
        rng = np.random.default_rng((int(seed), int(frame_index)))
        return rng.integers(0, 256, (h, w), dtype=np.uint8)
    if name == "line":
        out = np.full((h, w), 16, dtype=np.uint8)
        col = (w // 2 + 2 * frame_index) % w
        out[:, col] = 240
        return out
    if name == "disk":
        angle = 2.0 * math.pi * (frame_index % 32) / 32.0
        orbit = min(w, h) / 4.0
        cx = w / 2.0 + orbit * math.cos(angle)
        cy = h / 2.0 + orbit * math.sin(angle)
        radius = max(2, min(w, h) // 6)
        yy, xx = np.mgrid[0:h, 0:w]
        out = np.full((h, w), 30, dtype=np.uint8)
        cxi = int(math.floor(cx + 0.5))
        cyi = int(math.floor(cy + 0.5))
        out[(xx - cxi) ** 2 + (yy - cyi) ** 2 <= radius * radius] = 220
        return out
    raise BadValue("unknown pattern %r" % name)


class PatternSource:
    def __init__(self, name, seed=0):
        if name not in PATTERN_NAMES:
            raise BadValue("unknown pattern %r" % name)
        self.name = name
        self.seed = int(seed)

    def frame(self, frame_index, size=None):
        w, h = size if size is not None else (NATIVE_W, NATIVE_H)
        return render_pattern(self.name, self.seed, frame_index, w, h)

    renders_at_output = True


def _decode_file(path):
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise FileError("cannot read %s: %s" % (path, exc)) from None
    scratch = Arena(capacity=2 * NATIVE_W * NATIVE_H * 2)
    img = read_image(data, scratch)
    if img.format is PixelFormat.GRAYSCALE8:
        return img.pixels.copy()
    px = img.pixels
    r = ((px >> 11) & 0x1F).astype(np.uint8)
    g = ((px >> 5) & 0x3F).astype(np.uint8)
    b = (px & 0x1F).astype(np.uint8)
    rgb = np.stack([(r << 3) | (r >> 2), (g << 2) | (g >> 4),
                    (b << 3) | (b >> 2)], axis=2)
    return rgb


def _scale_nearest(frame, new_w, new_h):
    h, w = frame.shape[:2]
    xi = (np.arange(new_w, dtype=np.int64) * w) // new_w
    yi = (np.arange(new_h, dtype=np.int64) * h) // new_h
    return frame[yi][:, xi]


class StillSource:
    renders_at_output = False

    def __init__(self, path):
        self.path = path
        self._native = None

    def frame(self, frame_index, size=None):
        if self._native is None:
            self._native = _scale_nearest(_decode_file(self.path),
                                          NATIVE_W, NATIVE_H)
        return self._native


class SequenceSource:
    renders_at_output = False

    def __init__(self, directory, loop=False):
        self.directory = directory
        self.loop = loop
        self._files = None

    def _listing(self):
        if self._files is None:
            try:
                names = sorted(os.listdir(self.directory))
            except OSError as exc:
                raise FileError("cannot list %s: %s"
                                % (self.directory, exc)) from None
            self._files = [os.path.join(self.directory, n) for n in names
                           if n.lower().endswith(_FILE_EXTS)]
        if not self._files:
            raise FileError("no frames in %s" % self.directory)
        return self._files

    def frame(self, frame_index, size=None):
        files = self._listing()
        if self.loop:
            index = frame_index % len(files)
        else:
            if frame_index >= len(files):
                raise SourceExhausted("sequence ended after %d frames"
                                      % len(files))
            index = frame_index
        return _scale_nearest(_decode_file(files[index]), NATIVE_W, NATIVE_H)


def render_frame(config, source, frame_index):
    """Full pipeline short of arena allocation; returns a uint8 array,
    (h, w) for GRAYSCALE8 output or (h, w, 3) for RGB565 output."""
    fw, fh = config.frame_dims()
    if config.window is None and source.renders_at_output:
        frame = source.frame(frame_index, size=(fw, fh))
    else:
        frame = source.frame(frame_index)
        if config.window is not None:
            x, y, w, h = config.window
            frame = frame[y:y + h, x:x + w]
        frame = _scale_nearest(frame, fw, fh)
    if config.hmirror:
        frame = frame[:, ::-1]
    if config.vflip:
        frame = frame[::-1]
    toned = (frame.astype(np.int32) * config.contrast >> 8) + config.brightness
    frame = np.clip(toned, 0, 255).astype(np.uint8)
    if config.pixformat is PixelFormat.GRAYSCALE8:
        if frame.ndim == 3:
            frame = ((77 * frame[:, :, 0].astype(np.uint32)
                      + 150 * frame[:, :, 1].astype(np.uint32)
                      + 29 * frame[:, :, 2].astype(np.uint32)) >> 8
                     ).astype(np.uint8)
        return frame
    if frame.ndim == 2:
        frame = np.stack([frame, frame, frame], axis=2)
    return frame


def _store(arena_img, frame, pixformat):
    if pixformat is PixelFormat.GRAYSCALE8:
        arena_img.pixels[:] = frame
    else:
        r = (frame[:, :, 0].astype(np.uint16) >> 3) << 11
        g = (frame[:, :, 1].astype(np.uint16) >> 2) << 5
        b = frame[:, :, 2].astype(np.uint16) >> 3
        arena_img.pixels[:] = r | g | b


def snapshot(config, source, frame_index, arena):
    """Capture one frame into a fresh arena image."""
    frame = render_frame(config, source, frame_index)
    fw, fh = config.frame_dims()
    img = Image(arena, fw, fh, config.pixformat)
    _store(img, frame, config.pixformat)
    return img


class Sensor:
    """Stateful sensor facade used by the script runtime and the server.

    Repeated snapshots with an unchanged frame geometry overwrite the
    same arena allocation in place, the way a real frame buffer would.
    """

    def __init__(self, arena, source=None):
        self.arena = arena
        self.config = SensorConfig()
        self.source = source if source is not None \
            else PatternSource("gradient")
        self.frame_index = 0
        self._buffer = None

    def reset(self):
        self.release()
        self.config = SensorConfig()
        self.frame_index = 0

    def release(self):
        """Free the retained frame buffer (it must be top of the arena)."""
        if self._buffer is not None:
            self._buffer.free()
            self._buffer = None

    def set_source(self, source):
        self.source = source
        self.frame_index = 0

    def snapshot(self):
        frame = render_frame(self.config, self.source, self.frame_index)
        self.frame_index += 1
        fw, fh = self.config.frame_dims()
        buf = self._buffer
        if buf is not None and (buf.width, buf.height, buf.format) \
                != (fw, fh, self.config.pixformat):
            buf.free()
            buf = self._buffer = None
        if buf is None:
            buf = Image(self.arena, fw, fh, self.config.pixformat)
            self._buffer = buf
        _store(buf, frame, self.config.pixformat)
        return buf

"""Device runtime shared by every connection.

All mutations (attributes, script lifecycle, frame publication) are
serialized under one lock; the published frame is handed out only as an
immutable copy, so readers never see a partially written snapshot.
"""

import threading

from ..camscript.parser import parse_source
from ..camscript.builtins import builtin_bindings
from ..camscript.interp import DEFAULT_MAX_STEPS, execute
from ..errors import BadValue, ScriptError, VirtcamError
from ..imgio import encode_jpeg
from ..membuf import Arena
from ..sensor import (FRAMESIZES, LED_NAMES, PATTERN_NAMES, PatternSource,
                      Sensor, SequenceSource, StillSource)
from . import wire

_BOOL_ATTRS = ("hmirror", "vflip")
_INT_ATTRS = ("brightness", "contrast")


class PublishedFrame:
    """Immutable snapshot copy living outside the arena."""
    __slots__ = ("width", "height", "format", "pixels")

    def __init__(self, img):
        self.width = img.width
        self.height = img.height
        self.format = img.format
        self.pixels = img.pixels.copy()
        self.pixels.setflags(write=False)


def parse_source_spec(text):
    """'pattern:NAME[:SEED]' | 'still:PATH' | 'seq:DIR[:loop]' -> source."""
    kind, _, rest = text.partition(":")
    if kind == "pattern":
        name, _, seed = rest.partition(":")
        if name not in PATTERN_NAMES:
            raise BadValue("unknown pattern %r" % name)
        if seed and not (seed.isdigit() or (seed[0] == "-"
                                            and seed[1:].isdigit())):
            raise BadValue("pattern seed must be an integer")
        return PatternSource(name, int(seed) if seed else 0)
    if kind == "still":
        if not rest:
            raise BadValue("still source needs a path")
        return StillSource(rest)
    if kind == "seq":
        directory, _, flag = rest.rpartition(":")
        if flag == "loop":
            return SequenceSource(directory, loop=True)
        if not rest:
            raise BadValue("seq source needs a directory")
        return SequenceSource(rest, loop=False)
    raise BadValue("unknown source kind %r" % kind)


def format_source_spec(source):
    if isinstance(source, PatternSource):
        return "pattern:%s:%d" % (source.name, source.seed)
    if isinstance(source, StillSource):
        return "still:%s" % source.path
    return "seq:%s%s" % (source.directory, ":loop" if source.loop else "")


def _parse_bool(text):
    lowered = text.strip().lower()
    if lowered in ("on", "true", "1", "yes"):
        return True
    if lowered in ("off", "false", "0", "no"):
        return False
    raise BadValue("expected on/off, got %r" % text)


def _fmt_bool(value):
    return "on" if value else "off"


class Device:
    """One virtual camera: sensor, arena, script slot, published frame."""

    def __init__(self, arena_bytes=None, source=None):
        self.arena = Arena() if arena_bytes is None else Arena(arena_bytes)
        self.sensor = Sensor(self.arena, source)
        self.lock = threading.RLock()
        self.jpeg_quality = 90
        self.pending_source = None
        self.script_thread = None
        self.stop_event = None
        self.published = None
        self.subscribers = []
        self.max_steps = DEFAULT_MAX_STEPS

    # -- event fan-out -------------------------------------------------------

    def subscribe(self, send):
        with self.lock:
            self.subscribers.append(send)

    def unsubscribe(self, send):
        with self.lock:
            if send in self.subscribers:
                self.subscribers.remove(send)

    def broadcast(self, data):
        with self.lock:
            targets = list(self.subscribers)
        for send in targets:
            try:
                send(data)
            except Exception:
                self.unsubscribe(send)

    # -- frame publication ----------------------------------------------------

    def publish(self, img):
        copy = PublishedFrame(img)
        with self.lock:
            self.published = copy

    def latest_frame(self):
        with self.lock:
            return self.published

    def encode_published(self):
        """FB_FRAME bytes for the latest snapshot, or None before one."""
        frame = self.latest_frame()
        if frame is None:
            return None
        with self.lock:
            quality = self.jpeg_quality
        jpeg = encode_jpeg(frame, quality=quality)
        return wire.fb_frame(frame.width, frame.height,
                             frame.format.value, jpeg)

    # -- script lifecycle -------------------------------------------------------

    def script_running(self):
        with self.lock:
            return self.script_thread is not None \
                and self.script_thread.is_alive()

    def upload(self, source_text):
        with self.lock:
            self.pending_source = source_text

    def start_script(self):
        """Begin executing the uploaded script.

        Returns None on success, otherwise (error_code, message) for the
        caller to turn into an ERROR response.
        """
        with self.lock:
            if self.script_running():
                return wire.E_SCRIPT_RUNNING, "a script is already running"
            if self.pending_source is None:
                return wire.E_BAD_REQUEST, "no script uploaded"
            try:
                program = parse_source(self.pending_source)
            except ScriptError as exc:
                return wire.E_SCRIPT_ERROR, str(exc)
            self.stop_event = threading.Event()
            self.script_thread = threading.Thread(
                target=self._run, args=(program, self.stop_event),
                name="camscript", daemon=True)
            self.script_thread.start()
        return None

    def _run(self, program, stop_event):
        def on_print(text):
            self.broadcast(wire.encode_frame(
                wire.PRINT, (text + "\n").encode("utf-8")))

        bindings = builtin_bindings(self.sensor, self.arena,
                                    on_print=on_print, on_frame=self.publish)
        try:
            report = execute(program, bindings,
                             {"max_steps": self.max_steps}, stop=stop_event)
        except VirtcamError as exc:
            report = {"status": "error", "steps": 0,
                      "error": "%s: %s" % (type(exc).__name__, exc)}
        if report["status"] in ("error", "steplimit") and report["error"]:
            self.broadcast(wire.error_frame(wire.E_SCRIPT_ERROR,
                                            report["error"]))
        # Clear the slot before announcing completion, so a client that
        # reacts to SCRIPT_DONE can start the next script immediately.
        with self.lock:
            self.script_thread = None
            self.stop_event = None
        self.broadcast(wire.done_frame(report["status"], report["steps"]))

    def stop_script(self):
        with self.lock:
            if self.stop_event is not None:
                self.stop_event.set()

    # -- attribute registry ------------------------------------------------------

    def get_attr(self, name):
        cfg = self.sensor.config
        with self.lock:
            if name == "framesize":
                fs = cfg.framesize
                return fs if isinstance(fs, str) else "%dx%d" % fs
            if name == "pixformat":
                return cfg.pixformat.value
            if name == "window":
                return "none" if cfg.window is None \
                    else "%d,%d,%d,%d" % cfg.window
            if name in _BOOL_ATTRS:
                return _fmt_bool(getattr(cfg, name))
            if name in _INT_ATTRS:
                return str(getattr(cfg, name))
            if name.startswith("led.") and name[4:] in LED_NAMES:
                return _fmt_bool(cfg.leds[name[4:]])
            if name == "jpeg.quality":
                return str(self.jpeg_quality)
            if name == "source":
                return format_source_spec(self.sensor.source)
        raise KeyError(name)

    def set_attr(self, name, text):
        """Set from canonical string form; BadValue on bad input,
        KeyError on an unknown name."""
        cfg = self.sensor.config
        with self.lock:
            if name == "framesize":
                if text in FRAMESIZES:
                    cfg.set("framesize", text)
                else:
                    w, _, h = text.partition("x")
                    if not (w.isdigit() and h.isdigit()):
                        raise BadValue("framesize must be a preset or WxH")
                    cfg.set("framesize", (int(w), int(h)))
            elif name == "pixformat":
                cfg.set("pixformat", text)
            elif name == "window":
                if text.strip().lower() in ("none", ""):
                    cfg.set("window", None)
                else:
                    parts = text.split(",")
                    if len(parts) != 4:
                        raise BadValue("window must be x,y,w,h or none")
                    try:
                        cfg.set("window", [int(p) for p in parts])
                    except ValueError:
                        raise BadValue("window must be integers") from None
            elif name in _BOOL_ATTRS:
                cfg.set(name, _parse_bool(text))
            elif name in _INT_ATTRS:
                try:
                    cfg.set(name, int(text))
                except ValueError:
                    raise BadValue("%s must be an integer" % name) from None
            elif name.startswith("led.") and name[4:] in LED_NAMES:
                cfg.set(name, _parse_bool(text))
            elif name == "jpeg.quality":
                try:
                    quality = int(text)
                except ValueError:
                    raise BadValue("quality must be an integer") from None
                if not 1 <= quality <= 100:
                    raise BadValue("quality out of range 1..100")
                self.jpeg_quality = quality
            elif name == "source":
                self.sensor.set_source(parse_source_spec(text))
            else:
                raise KeyError(name)

    # -- request dispatch -----------------------------------------------------------

    def handle_request(self, frame):
        """One request frame in, exactly one terminal response out."""
        ftype, payload = frame.type, frame.payload
        if ftype == wire.SCRIPT_UPLOAD:
            try:
                text = payload.decode("utf-8")
            except UnicodeDecodeError:
                return wire.error_frame(wire.E_BAD_REQUEST,
                                        "script is not valid UTF-8")
            self.upload(text)
            return wire.encode_frame(wire.ACK)
        if ftype == wire.SCRIPT_EXEC:
            failure = self.start_script()
            if failure is not None:
                return wire.error_frame(*failure)
            return wire.encode_frame(wire.ACK)
        if ftype == wire.SCRIPT_STOP:
            self.stop_script()
            return wire.encode_frame(wire.ACK)
        if ftype == wire.FB_REQUEST:
            response = self.encode_published()
            if response is None:
                return wire.error_frame(wire.E_NO_FRAME, "no frame yet")
            return response
        if ftype == wire.ATTR_GET:
            try:
                name = payload.decode("utf-8")
            except UnicodeDecodeError:
                return wire.error_frame(wire.E_BAD_REQUEST, "bad attribute")
            try:
                value = self.get_attr(name)
            except KeyError:
                return wire.error_frame(wire.E_ATTR_UNKNOWN,
                                        "unknown attribute %r" % name)
            return wire.encode_frame(wire.ACK, value.encode("utf-8"))
        if ftype == wire.ATTR_SET:
            sep = payload.find(b"\x00")
            if sep < 0:
                return wire.error_frame(wire.E_BAD_REQUEST,
                                        "missing name/value separator")
            try:
                name = payload[:sep].decode("utf-8")
                value = payload[sep + 1:].decode("utf-8")
            except UnicodeDecodeError:
                return wire.error_frame(wire.E_BAD_REQUEST, "bad attribute")
            try:
                self.set_attr(name, value)
            except KeyError:
                return wire.error_frame(wire.E_ATTR_UNKNOWN,
                                        "unknown attribute %r" % name)
            except (BadValue, VirtcamError) as exc:
                return wire.error_frame(wire.E_BAD_REQUEST, str(exc))
            return wire.encode_frame(wire.ACK)
        return wire.error_frame(wire.E_BAD_REQUEST,
                                "unknown request type 0x%02X" % ftype)

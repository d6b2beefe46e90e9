"""Command-line entry point.

Subcommands: run (headless script execution), serve (socket device),
convert (format conversion), and the batch vision tools detect, match,
edges, lines, flow. Exit codes: 0 success, 1 domain error, 2 usage
error. VIRTCAM_ARENA overrides the default arena size.
"""

import argparse
import json
import os
import signal
import sys
import threading

from .camscript import run_script
from .devserve import Device, parse_source_spec, serve
from .errors import UnsupportedFormat, VirtcamError
from .features import (fast_detect, haar_detect, hough_lines, load_cascade,
                       match_descriptors, optical_flow, orb_describe,
                       to_grayscale)
from .features.canny import canny
from .imgio import read_image, write_image
from .membuf import Arena, DEFAULT_ARENA_BYTES, PixelFormat
from .sensor import Sensor

_CONVERT_FORMATS = {".pgm": "pgm", ".ppm": "ppm", ".bmp": "bmp",
                    ".jpg": "jpeg", ".jpeg": "jpeg", ".gif": "gif"}
_READABLE = (".pgm", ".ppm", ".bmp")


def _arena_bytes(args):
    if getattr(args, "arena", None) is not None:
        return args.arena
    env = os.environ.get("VIRTCAM_ARENA")
    if env:
        try:
            return int(env)
        except ValueError:
            raise SystemExit2("VIRTCAM_ARENA must be an integer")
    return DEFAULT_ARENA_BYTES


class SystemExit2(Exception):
    """Usage error discovered after argparse (exit code 2)."""


def _read_file(path):
    try:
        with open(path, "rb") as fh:
            return fh.read()
    except OSError as exc:
        raise VirtcamError("cannot read %s: %s" % (path, exc)) from None


def _load_image(path, arena):
    ext = os.path.splitext(path)[1].lower()
    if ext not in _READABLE:
        raise SystemExit2("unsupported input extension %r" % ext)
    return read_image(_read_file(path), arena)


def _load_gray(path, arena):
    img = _load_image(path, arena)
    if img.format is PixelFormat.RGB565:
        gray = to_grayscale(img, arena)
        return gray
    return img


def _emit(args, text_line, obj):
    if args.json:
        print(json.dumps(obj))
    else:
        print(text_line)


# -- run ----------------------------------------------------------------

def cmd_run(args):
    try:
        with open(args.script, "r", encoding="utf-8") as fh:
            source = fh.read()
    except OSError as exc:
        print("cannot read %s: %s" % (args.script, exc), file=sys.stderr)
        return 1
    arena = Arena(_arena_bytes(args))
    sensor = Sensor(arena, parse_source_spec(args.source))
    stop = threading.Event()
    state = {"count": 0}
    if args.out:
        os.makedirs(args.out, exist_ok=True)

    def on_frame(img):
        if args.out:
            fmt = "pgm" if img.format is PixelFormat.GRAYSCALE8 else "ppm"
            name = os.path.join(args.out, "%06d.%s" % (state["count"], fmt))
            with open(name, "wb") as fh:
                fh.write(write_image(img, fmt))
        state["count"] += 1
        if args.frames is not None and state["count"] >= args.frames:
            stop.set()

    report = run_script(source, sensor, arena, stop=stop,
                        on_print=print, on_frame=on_frame)
    if report["status"] in ("ok", "stopped"):
        return 0
    print(report["error"], file=sys.stderr)
    return 1


# -- serve ---------------------------------------------------------------

def cmd_serve(args):
    device = Device(arena_bytes=_arena_bytes(args),
                    source=parse_source_spec(args.source))
    try:
        handle = serve(device, host=args.host, port=args.listen,
                       ws_port=args.ws, http_port=args.http,
                       http_dir=args.http_dir)
    except OSError as exc:
        print("cannot bind: %s" % exc, file=sys.stderr)
        return 2
    shutdown = threading.Event()
    previous = {}
    try:
        for signum in (signal.SIGINT, signal.SIGTERM):
            previous[signum] = signal.signal(
                signum, lambda *_: shutdown.set())
    except ValueError:
        pass  # not the main thread; Ctrl-C still lands as KeyboardInterrupt
    print("listening on tcp://%s:%d" % handle.tcp_address)
    print("listening on ws://%s:%d" % handle.ws_address)
    if handle.http_address is not None:
        print("serving ide on http://%s:%d" % handle.http_address)
    sys.stdout.flush()
    try:
        shutdown.wait()
    except KeyboardInterrupt:
        pass
    finally:
        for signum, handler in previous.items():
            signal.signal(signum, handler)
        handle.close()
    return 0


# -- convert --------------------------------------------------------------

def cmd_convert(args):
    in_ext = os.path.splitext(args.input)[1].lower()
    out_ext = os.path.splitext(args.output)[1].lower()
    if in_ext not in _READABLE:
        print("unsupported input extension %r" % in_ext, file=sys.stderr)
        return 2
    if out_ext not in _CONVERT_FORMATS:
        print("unsupported output extension %r" % out_ext, file=sys.stderr)
        return 2
    arena = Arena(_arena_bytes(args))
    img = read_image(_read_file(args.input), arena)
    fmt = _CONVERT_FORMATS[out_ext]
    if fmt == "gif":
        from .imgio import GifWriter
        writer = GifWriter(img.width, img.height, loop=False)
        writer.add_frame(img, delay_cs=10)
        data = writer.end()
    else:
        data = write_image(img, fmt, quality=args.quality)
    with open(args.output, "wb") as fh:
        fh.write(data)
    return 0


# -- vision subcommands -------------------------------------------------------

def cmd_detect(args):
    arena = Arena(_arena_bytes(args))
    img = _load_gray(args.input, arena)
    cascade = load_cascade(_read_file(args.cascade).decode("utf-8"))
    hits = haar_detect(img, cascade, scale_factor=args.scale_factor,
                       step=args.step, min_neighbors=args.min_neighbors)
    hits = sorted(hits, key=lambda d: (-d.score, d.y, d.x))
    for d in hits:
        _emit(args, "detect: %d %d %d %d %.4f" % (d.x, d.y, d.w, d.h,
                                                  d.score),
              {"x": d.x, "y": d.y, "w": d.w, "h": d.h,
               "score": round(d.score, 6)})
    if args.fig:
        from . import viz
        viz.save_detections_figure(img.pixels, hits, args.fig)
    return 0


def cmd_match(args):
    arena = Arena(_arena_bytes(args))
    img_a = _load_gray(args.a, arena)
    img_b = _load_gray(args.b, arena)
    kps_a = orb_describe(img_a, fast_detect(img_a, args.threshold))
    kps_b = orb_describe(img_b, fast_detect(img_b, args.threshold))
    pairs = match_descriptors(kps_a, kps_b)
    for ai, bi, dist in pairs:
        _emit(args, "match: %d %d %d" % (ai, bi, dist),
              {"a": ai, "b": bi, "distance": dist})
    if args.fig:
        from . import viz
        viz.save_matches_figure(img_a.pixels, img_b.pixels,
                                kps_a, kps_b, pairs, args.fig)
    return 0


def cmd_edges(args):
    arena = Arena(_arena_bytes(args))
    img = _load_gray(args.input, arena)
    edge_img = canny(img, args.low, args.high, arena)
    count = int((edge_img.pixels != 0).sum())
    _emit(args, "edges: %d" % count, {"edges": count})
    if args.out:
        with open(args.out, "wb") as fh:
            fh.write(write_image(edge_img, "pgm"))
    if args.fig:
        from . import viz
        viz.save_edges_figure(img.pixels, edge_img.pixels, args.fig)
    return 0


def cmd_lines(args):
    arena = Arena(_arena_bytes(args))
    img = _load_gray(args.input, arena)
    hits = hough_lines(img, args.threshold)
    for hit in hits:
        _emit(args, "rho=%d theta=%d" % (hit.rho, hit.theta),
              {"rho": hit.rho, "theta": hit.theta, "votes": hit.votes})
    if args.fig:
        from . import viz
        viz.save_lines_figure(img.pixels, hits, args.fig)
    return 0


def cmd_flow(args):
    arena = Arena(_arena_bytes(args))
    prev = _load_gray(args.prev, arena)
    nxt = _load_gray(args.next, arena)
    mv = optical_flow(prev, nxt, radius=args.radius)
    _emit(args, "dx=%d dy=%d" % (mv.dx, mv.dy),
          {"dx": mv.dx, "dy": mv.dy, "response": round(mv.response, 6)})
    if args.fig:
        from . import viz
        viz.save_flow_figure(prev.pixels, nxt.pixels, mv.dx, mv.dy,
                             mv.response, args.fig)
    return 0


# -- argument wiring -------------------------------------------------------

def _add_arena(p):
    p.add_argument("--arena", type=int, default=None,
                   help="arena size in bytes (default %d or VIRTCAM_ARENA)"
                   % DEFAULT_ARENA_BYTES)


def _add_json_fig(p):
    p.add_argument("--json", action="store_true",
                   help="emit one JSON object per result line")
    p.add_argument("--fig", metavar="PATH",
                   help="render a matplotlib overlay figure to PATH")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="virtcam",
        description="Virtual smart camera: scriptable sensor, vision "
                    "algorithms, device server.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="execute a .cam script headless")
    p.add_argument("script")
    p.add_argument("--source", default="pattern:gradient:0",
                   help="pattern:NAME[:SEED] | still:PATH | seq:DIR[:loop]")
    p.add_argument("--frames", type=int, default=None,
                   help="stop after this many published frames")
    p.add_argument("--out", help="directory for numbered frame dumps")
    _add_arena(p)
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("serve", help="serve the virtual device")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--listen", type=int, default=3370,
                   help="raw socket port (default 3370)")
    p.add_argument("--ws", type=int, default=3371,
                   help="websocket port (default 3371)")
    p.add_argument("--http", type=int, default=None,
                   help="also serve IDE static files on this port")
    p.add_argument("--http-dir", default=None,
                   help="directory of IDE static files")
    p.add_argument("--source", default="pattern:gradient:0")
    _add_arena(p)
    p.set_defaults(fn=cmd_serve)

    p = sub.add_parser("convert", help="convert between image formats")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--quality", type=int, default=90)
    _add_arena(p)
    p.set_defaults(fn=cmd_convert)

    p = sub.add_parser("detect", help="cascade detection on an image file")
    p.add_argument("input")
    p.add_argument("--cascade", required=True)
    p.add_argument("--scale-factor", type=float, default=1.25)
    p.add_argument("--step", type=int, default=2)
    p.add_argument("--min-neighbors", type=int, default=3)
    _add_json_fig(p)
    _add_arena(p)
    p.set_defaults(fn=cmd_detect)

    p = sub.add_parser("match", help="keypoint matching between two images")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--threshold", type=int, default=20)
    _add_json_fig(p)
    _add_arena(p)
    p.set_defaults(fn=cmd_match)

    p = sub.add_parser("edges", help="edge detection on an image file")
    p.add_argument("input")
    p.add_argument("--low", type=int, default=40)
    p.add_argument("--high", type=int, default=80)
    p.add_argument("--out", help="write the edge map as PGM")
    _add_json_fig(p)
    _add_arena(p)
    p.set_defaults(fn=cmd_edges)

    p = sub.add_parser("lines", help="line finding on a binary edge image")
    p.add_argument("input")
    p.add_argument("--threshold", type=int, default=20)
    _add_json_fig(p)
    _add_arena(p)
    p.set_defaults(fn=cmd_lines)

    p = sub.add_parser("flow", help="displacement between two frames")
    p.add_argument("prev")
    p.add_argument("next")
    p.add_argument("--radius", type=int, default=8)
    _add_json_fig(p)
    _add_arena(p)
    p.set_defaults(fn=cmd_flow)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except SystemExit2 as exc:
        print(str(exc), file=sys.stderr)
        return 2
    except UnsupportedFormat as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except VirtcamError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except OSError as exc:
        print(str(exc), file=sys.stderr)
        return 1


def console_main():
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())

"""Final acceptance gate.

One test per shipped guarantee. Each prints a single pass/fail line and
enforces a wall-clock budget, so `pytest tests/test_acceptance.py -s`
reads as a checklist. The oracles here are deliberately independent of
the library code they judge: rectangle sums come from pixel slices,
NCC from a float double loop, the eye objective from a plain restatement,
and codec output goes through Pillow rather than back through our own
readers.
"""

import contextlib
import io
import os
import struct
import time

import numpy as np
import pytest
from PIL import Image as PILImage

from virtcam import features as ft
from virtcam import imgio
from virtcam.camscript import parse_source, run_script, to_source
from virtcam.devserve import Device, serve, wire
from virtcam.errors import CrcMismatch, OutOfMemory
from virtcam.membuf import (DEFAULT_ARENA_BYTES, Arena, Image, PixelFormat,
                            integral_image, rect_sqsum, rect_sum)
from virtcam.sensor import Sensor

from conftest import CORPUS, FIXTURES, make_gray, make_rgb565, shift_replicate
from test_corpus import SCRIPTS, run_corpus_script
from test_devserve import ChecksumSource, TcpClient, _reply, _wait_idle
from test_features import (BRIGHT_DARK, brute_force_detect, canny_oracle,
                           described_set, detections_equal, disk_image,
                           fast_oracle_positions, match_oracle, ncc_oracle,
                           random_cascade)
from test_imgio import find_chunks, psnr, walk_riff


@contextlib.contextmanager
def criterion(num, name, budget):
    """Prints one checklist line; the body must also beat the budget."""
    t0 = time.monotonic()
    try:
        yield
    except BaseException:
        print("acceptance %d %s: FAIL (%.2fs)" % (num, name,
                                                  time.monotonic() - t0))
        raise
    elapsed = time.monotonic() - t0
    print("acceptance %d %s: pass (%.2fs)" % (num, name, elapsed))
    assert elapsed < budget, "budget %.0fs exceeded: %.2fs" % (budget, elapsed)


# ---------------------------------------------------------------------------
# 1. memory model

def test_criterion_01_memory_model():
    with criterion(1, "memory_model", 1.0):
        arena = Arena()
        assert DEFAULT_ARENA_BYTES == 524288
        assert arena.capacity == 524288

        with pytest.raises(OutOfMemory):
            Image(arena, 640, 480, PixelFormat.RGB565)
        assert arena.used == 0  # the failed allocation must not leak

        vga = Image(arena, 640, 480, PixelFormat.GRAYSCALE8)
        vga.free()
        qvga = Image(arena, 320, 240, PixelFormat.RGB565)
        qvga.free()
        assert arena.used == 0


# ---------------------------------------------------------------------------
# 2. integral image

def test_criterion_02_integral_image(arena):
    with criterion(2, "integral_image", 5.0):
        for i in range(100):
            rng = np.random.default_rng(1000 + i)
            px = rng.integers(0, 256, size=(16, 16), dtype=np.uint8)
            img = make_gray(arena, px)
            ii = integral_image(img, with_squares=True)
            wide = px.astype(np.int64)
            for _ in range(200):
                x = int(rng.integers(0, 16))
                y = int(rng.integers(0, 16))
                w = int(rng.integers(1, 17 - x))
                h = int(rng.integers(1, 17 - y))
                block = wide[y:y + h, x:x + w]
                assert rect_sum(ii, x, y, w, h) == int(block.sum())
                assert rect_sqsum(ii, x, y, w, h) == int((block * block).sum())
            ii.free()
            img.free()
        assert arena.used == 0


# ---------------------------------------------------------------------------
# 3. haar cascades

def test_criterion_03_haar_cascade(arena):
    with criterion(3, "haar_cascade", 30.0):
        rng = np.random.default_rng(3000)
        cascades = [random_cascade(rng) for _ in range(10)]
        for i in range(25):
            px = np.random.default_rng(3100 + i).integers(
                0, 256, size=(32, 32), dtype=np.uint8)
            img = make_gray(arena, px)
            for cascade in cascades:
                got = ft.haar_detect(img, cascade)
                want = brute_force_detect(px, cascade)
                assert detections_equal(got, want)
            img.free()

        fixture = imgio.read_image((FIXTURES / "bright_dark.pgm").read_bytes(),
                                   arena)
        dets = ft.haar_detect(fixture, ft.load_cascade(BRIGHT_DARK))
        assert len(dets) == 1
        fixture.free()
        assert arena.used == 0


# ---------------------------------------------------------------------------
# 4. template matching

def _unimodal_pair(arena, seed):
    # A radial bump keeps the correlation surface single-peaked, so a
    # greedy descent from any corner must reach the global maximum.
    rng = np.random.default_rng(seed)
    tx = int(rng.integers(20, 34))
    ty = int(rng.integers(20, 34))
    sigma = float(rng.uniform(10.0, 14.0))
    yy, xx = np.mgrid[0:64, 0:64]
    d2 = (xx - tx) ** 2 + (yy - ty) ** 2
    px = (30.0 + 200.0 * np.exp(-d2 / (2 * sigma * sigma))).astype(np.uint8)
    img = make_gray(arena, px)
    tmpl = make_gray(arena, px[ty - 8:ty + 8, tx - 8:tx + 8])
    return img, tmpl, (tx - 8, ty - 8)


def test_criterion_04_ncc_template(arena):
    with criterion(4, "ncc_template", 60.0):
        for seed in (40, 41, 42):
            rng = np.random.default_rng(seed)
            px = rng.integers(0, 256, size=(64, 64), dtype=np.uint8)
            img = make_gray(arena, px)
            tmpl = make_gray(arena, px[20:36, 24:40])
            x, y, score = ft.ncc_match_exhaustive(img, tmpl)
            assert (x, y) == (24, 20)
            assert abs(score - 1.0) <= 1e-6
            tmpl.free()
            img.free()

        for seed in range(10):
            rng = np.random.default_rng(4100 + seed)
            ipx = rng.integers(0, 256, size=(64, 64), dtype=np.uint8)
            tpx = rng.integers(0, 256, size=(16, 16), dtype=np.uint8)
            img = make_gray(arena, ipx)
            tmpl = make_gray(arena, tpx)
            surface = ft.ncc_scores(img, tmpl)
            assert surface.shape == (49, 49)
            for y in range(49):
                for x in range(49):
                    ref = ncc_oracle(ipx, tpx, x, y)
                    assert abs(surface[y, x] - ref) <= 1e-6
            tmpl.free()
            img.free()

        for seed in range(10):
            img, tmpl, peak = _unimodal_pair(arena, 4200 + seed)
            exh_stats, ds_stats = {}, {}
            ex, ey, escore = ft.ncc_match_exhaustive(img, tmpl,
                                                     stats=exh_stats)
            dx, dy, dscore = ft.ncc_match_ds(img, tmpl, (0, 0),
                                             stats=ds_stats)
            assert (ex, ey) == peak
            assert (dx, dy) == (ex, ey)
            assert abs(dscore - escore) <= 1e-9
            assert ds_stats["evaluations"] < exh_stats["evaluations"]
            tmpl.free()
            img.free()
        assert arena.used == 0


# ---------------------------------------------------------------------------
# 5. fast corners and orb descriptors

def test_criterion_05_fast_orb(arena):
    with criterion(5, "fast_orb", 30.0):
        for seed in range(20):
            px = np.random.default_rng(5000 + seed).integers(
                0, 256, size=(24, 24), dtype=np.uint8)
            img = make_gray(arena, px)
            got = {(k.x, k.y) for k in ft.fast_detect(img, 20, nonmax=False)}
            assert got == fast_oracle_positions(px, 20)
            img.free()

        px = np.random.default_rng(5100).integers(0, 200, size=(24, 24),
                                                  dtype=np.uint8)
        img = make_gray(arena, px)
        base = [(k.x, k.y, k.score) for k in ft.fast_detect(img, 15)]
        img.free()
        img = make_gray(arena, px + 10)
        lifted = [(k.x, k.y, k.score) for k in ft.fast_detect(img, 15)]
        img.free()
        assert base == lifted

        kps = described_set(arena, 51)
        assert len(kps) >= 3
        assert all(ft.hamming(k.descriptor, k.descriptor) == 0 for k in kps)

        other = described_set(arena, 52)
        got = ft.match_descriptors(kps, other)
        assert got == match_oracle(kps, other)
        assert arena.used == 0


# ---------------------------------------------------------------------------
# 6. canny edges and hough lines

def _top_line(arena, px, low=50, high=100, threshold=30):
    img = make_gray(arena, px)
    edges = ft.canny(img, low, high, arena)
    lines = ft.hough_lines(edges, threshold)
    edges.free()
    img.free()
    assert lines, "expected at least one line"
    return lines[0]


def test_criterion_06_canny_hough(arena):
    with criterion(6, "canny_hough", 10.0):
        horizontal = np.zeros((64, 64), dtype=np.uint8)
        horizontal[20:, :] = 200
        hit = _top_line(arena, horizontal)
        assert abs(hit.rho - 20) <= 1 and abs(hit.theta - 90) <= 1

        vertical = np.zeros((64, 64), dtype=np.uint8)
        vertical[:, 20:] = 200
        hit = _top_line(arena, vertical)
        assert min(hit.theta, 180 - hit.theta) <= 1
        assert abs(abs(hit.rho) - 20) <= 1

        diagonal = np.zeros((64, 64), dtype=np.uint8)
        diagonal[np.tril_indices(64)] = 200  # bright where y >= x
        hit = _top_line(arena, diagonal)
        assert abs(hit.theta - 135) <= 1 and abs(hit.rho) <= 1

        from conftest import smooth_scene
        px = smooth_scene(np.random.default_rng(60), 48, 48, sigma=2.0)
        img = make_gray(arena, px)
        edges = ft.canny(img, 30, 70, arena)
        assert set(np.unique(edges.pixels).tolist()) <= {0, 255}
        _, mag = canny_oracle(px, 30, 70)
        ys, xs = np.nonzero(edges.pixels)
        assert len(ys) > 0
        assert (mag[ys, xs] >= 30).all()
        edges.free()
        img.free()

        flat = make_gray(arena, np.full((48, 48), 77, dtype=np.uint8))
        edges = ft.canny(flat, 30, 70, arena)
        assert int(np.count_nonzero(edges.pixels)) == 0
        assert ft.hough_lines(edges, 1) == []
        edges.free()
        flat.free()
        assert arena.used == 0


# ---------------------------------------------------------------------------
# 7. eye center

def _eye_oracle(px):
    """Scores every candidate center with a plain transcription of the
    gradient-alignment objective and returns the winning (x, y)."""
    p = px.astype(np.float64)
    h, w = p.shape
    gx = np.zeros_like(p)
    gy = np.zeros_like(p)
    gx[:, 1:-1] = (p[:, 2:] - p[:, :-2]) / 2.0
    gx[:, 0] = p[:, 1] - p[:, 0]
    gx[:, -1] = p[:, -1] - p[:, -2]
    gy[1:-1, :] = (p[2:, :] - p[:-2, :]) / 2.0
    gy[0, :] = p[1, :] - p[0, :]
    gy[-1, :] = p[-1, :] - p[-2, :]

    mag = np.hypot(gx, gy)
    keep = mag >= 0.3 * mag.max()
    ys, xs = np.nonzero(keep)
    ux = gx[keep] / mag[keep]
    uy = gy[keep] / mag[keep]

    sigma = 0.3 * ((5 - 1) * 0.5 - 1) + 0.8
    taps = np.exp(-((np.arange(5) - 2.0) ** 2) / (2 * sigma * sigma))
    taps /= taps.sum()
    padded = np.pad(p, 2, mode="edge")
    smooth = np.zeros_like(p)
    for j in range(5):
        for i in range(5):
            smooth += taps[j] * taps[i] * padded[j:j + h, i:i + w]
    prior = 255.0 - np.clip(smooth, 0.0, 255.0)

    best = None
    best_xy = (0, 0)
    for cy in range(h):
        for cx in range(w):
            dx = xs - float(cx)
            dy = ys - float(cy)
            dist = np.maximum(np.hypot(dx, dy), 1e-12)
            dots = (dx * ux + dy * uy) / dist
            dots[dist < 0.5] = 0.0
            score = prior[cy, cx] * float((dots * dots).sum()) / len(xs)
            if best is None or score > best:
                best = score
                best_xy = (cx, cy)
    return best_xy


def test_criterion_07_eye_center(arena):
    with criterion(7, "eye_center", 10.0):
        for seed in range(10):
            rng = np.random.default_rng(7000 + seed)
            cx = int(rng.integers(9, 31))
            cy = int(rng.integers(9, 31))
            px = disk_image(40, 40, cx, cy, 5)
            img = make_gray(arena, px)
            fx, fy = ft.find_eye_center(img, (0, 0, 40, 40))
            img.free()
            ox, oy = _eye_oracle(px)
            assert abs(fx - ox) <= 1 and abs(fy - oy) <= 1
        assert arena.used == 0


# ---------------------------------------------------------------------------
# 8. optical flow

def _displacement_oracle(prev_px, next_px, radius):
    h, w = prev_px.shape
    tmpl = prev_px[radius:h - radius, radius:w - radius].astype(np.float64)
    tz = tmpl - tmpl.mean()
    tnorm = (tz * tz).sum()
    th, tw = tmpl.shape
    best = None
    best_xy = (0, 0)
    for oy in range(2 * radius + 1):
        for ox in range(2 * radius + 1):
            win = next_px[oy:oy + th, ox:ox + tw].astype(np.float64)
            wz = win - win.mean()
            den = np.sqrt((wz * wz).sum() * tnorm)
            score = 0.0 if den == 0 else float((wz * tz).sum() / den)
            if best is None or score > best:
                best = score
                best_xy = (ox - radius, oy - radius)
    return best_xy


def test_criterion_08_optical_flow(arena):
    with criterion(8, "optical_flow", 30.0):
        from conftest import smooth_scene
        base = smooth_scene(np.random.default_rng(80), 64, 64, sigma=3.0)
        prev = make_gray(arena, base)
        for dy in range(-5, 6):
            for dx in range(-5, 6):
                moved = shift_replicate(base, dx, dy)
                nxt = make_gray(arena, moved)
                vec = ft.optical_flow(prev, nxt, radius=8)
                nxt.free()
                assert (vec.dx, vec.dy) == (dx, dy)
                assert _displacement_oracle(base, moved, 8) == (dx, dy)
        prev.free()
        assert arena.used == 0


# ---------------------------------------------------------------------------
# 9. codecs

def _gradient_gray(w, h):
    yy, xx = np.mgrid[0:h, 0:w]
    return ((xx / (w - 1) + yy / (h - 1)) * 127.5).astype(np.uint8)


def test_criterion_09_codecs(arena):
    with criterion(9, "codecs", 60.0):
        for i in range(50):
            rng = np.random.default_rng(9000 + i)
            w = int(rng.integers(1, 33))
            h = int(rng.integers(1, 33))
            if i % 3 == 0:
                img = make_gray(arena, rng.integers(0, 256, size=(h, w),
                                                    dtype=np.uint8))
                fmt = "pgm"
            else:
                img = make_rgb565(arena, rng.integers(0, 1 << 16, size=(h, w),
                                                      dtype=np.uint16))
                fmt = "ppm" if i % 3 == 1 else "bmp"
            back = imgio.read_image(imgio.write_image(img, fmt), arena)
            assert back.format is img.format
            assert np.array_equal(back.pixels, img.pixels)
            back.free()
            img.free()

        grad = make_gray(arena, _gradient_gray(128, 96))
        data = imgio.write_image(grad, "jpg", quality=90)
        ref = PILImage.open(io.BytesIO(data)).convert("L")
        assert psnr(np.asarray(ref), grad.pixels) >= 35.0
        grad.free()

        frames = [np.full((16, 12), v, dtype=np.uint8) for v in (0, 128, 255)]
        writer = imgio.GifWriter(12, 16)
        for px in frames:
            img = make_gray(arena, px)
            writer.add_frame(img)
            img.free()
        gif = PILImage.open(io.BytesIO(writer.end()))
        assert gif.n_frames == 3
        assert gif.size == (12, 16)

        writer = imgio.MjpegWriter(16, 16, fps=10, quality=90)
        for k in range(4):
            img = make_gray(arena, _gradient_gray(16, 16) + k)
            writer.add_frame(img)
            img.free()
        fourcc, form, children = walk_riff(writer.end())
        assert fourcc == b"RIFF" and form == b"AVI "
        hdrl = next(c for c in children if c[0] == b"LIST" and c[1] == b"hdrl")
        avih = find_chunks(hdrl[2], b"avih")[0]
        assert struct.unpack("<I", avih[2][16:20])[0] == 4
        movi = next(c for c in children if c[0] == b"LIST" and c[1] == b"movi")
        dcs = find_chunks(movi[2], b"00dc")
        assert len(dcs) == 4
        for _, _, payload in dcs:
            assert PILImage.open(io.BytesIO(payload)).size == (16, 16)
        assert arena.used == 0


# ---------------------------------------------------------------------------
# 10. script interpreter

def test_criterion_10_interpreter():
    with criterion(10, "interpreter", 30.0):
        assert len(SCRIPTS) >= 20
        cwd = os.getcwd()
        os.chdir(CORPUS)
        try:
            for path in SCRIPTS:
                report, arena = run_corpus_script(path)
                assert report["status"] == "ok", (path.name, report)
                golden = path.with_suffix(".out").read_text()
                assert "\n".join(report["prints"]) + "\n" == golden, path.name
                assert arena.used == 0, path.name

                printed = to_source(parse_source(path.read_text()))
                assert to_source(parse_source(printed)) == printed, path.name
        finally:
            os.chdir(cwd)

        arena = Arena()
        report = run_script("while True:\n    pass\n", Sensor(arena), arena,
                            max_steps=5000)
        assert report["status"] == "steplimit"
        assert report["steps"] == 5000


# ---------------------------------------------------------------------------
# 11. wire protocol and device server

def test_criterion_11_protocol():
    with criterion(11, "protocol", 60.0):
        rng = np.random.default_rng(11000)
        for _ in range(1000):
            ftype = int(rng.integers(0, 256))
            payload = rng.bytes(int(rng.integers(0, 513)))
            data = wire.encode_frame(ftype, payload)
            frame, consumed = wire.decode_frame(data)
            assert consumed == len(data)
            assert frame.type == ftype and frame.payload == payload

            # flip one bit under the checksum (type, payload, or crc;
            # never the length field, which fails differently)
            spots = [2] + list(range(7, len(data)))
            pos = spots[int(rng.integers(0, len(spots)))]
            broken = bytearray(data)
            broken[pos] ^= 1 << int(rng.integers(0, 8))
            with pytest.raises(CrcMismatch):
                wire.decode_frame(bytes(broken))

        handle = serve(port=0, ws_port=0)
        try:
            client = TcpClient(handle.tcp_address)
            try:
                client.send(wire.ATTR_SET, b"framesize\x00QQVGA")
                assert client.next_frame().type == wire.ACK
                client.send(wire.SCRIPT_UPLOAD,
                            b"img = sensor.snapshot()\nprint(1+1)\n")
                assert client.next_frame().type == wire.ACK
                client.send(wire.SCRIPT_EXEC)
                assert client.next_frame().type == wire.ACK
                done, earlier = client.wait_for(wire.SCRIPT_DONE)
                assert struct.unpack("<BQ", done.payload)[0] == 0
                assert [f.payload for f in earlier
                        if f.type == wire.PRINT] == [b"2\n"]
                client.send(wire.FB_REQUEST)
                fb, _ = client.wait_for(wire.FB_FRAME)
                w, h, fmt = struct.unpack_from("<HHB", fb.payload)
                assert (w, h, fmt) == (160, 120, 1)
                decoded = PILImage.open(io.BytesIO(fb.payload[5:]))
                assert decoded.size == (160, 120)

                handle.device.max_steps = 10 ** 9
                client.send(wire.SCRIPT_UPLOAD, b"while True:\n    pass\n")
                assert client.next_frame().type == wire.ACK
                client.send(wire.SCRIPT_EXEC)
                assert client.next_frame().type == wire.ACK
                rival = TcpClient(handle.tcp_address)
                try:
                    rival.send(wire.SCRIPT_EXEC)
                    err, _ = rival.wait_for(wire.ERROR)
                    assert err.payload[0] == 0x02
                finally:
                    rival.close()
                client.send(wire.SCRIPT_STOP)
                done, _ = client.wait_for(wire.SCRIPT_DONE)
                assert struct.unpack("<BQ", done.payload)[0] == 2
            finally:
                client.close()
        finally:
            handle.close()

        device = Device(source=ChecksumSource())
        device.max_steps = 10 ** 9
        device.set_attr("framesize", "64x48")
        _reply(device, wire.SCRIPT_UPLOAD,
               b"while True:\n    sensor.snapshot()\n")
        assert _reply(device, wire.SCRIPT_EXEC).type == wire.ACK
        yy, xx = np.mgrid[0:48, 0:64]
        base = (xx + 3 * yy) % 256
        offsets = set()
        deadline = time.monotonic() + 10.0
        while len(offsets) < 3 and time.monotonic() < deadline:
            frame = device.latest_frame()
            if frame is None:
                continue
            px = frame.pixels
            assert not px.flags.writeable
            offset = int(px[0, 0])
            assert np.array_equal(px, (base + offset) % 256)
            offsets.add(offset)
        _reply(device, wire.SCRIPT_STOP)
        _wait_idle(device)
        assert len(offsets) >= 3, "expected several distinct published frames"

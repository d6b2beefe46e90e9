import math

import numpy as np
import pytest

import virtcam.features as ft
from virtcam.errors import (BadCascade, BadRoi, BadThresholds, DegenerateRoi,
                            DimensionMismatch, ImageSmallerThanWindow,
                            MissingDescriptors, TemplateTooLarge, WrongFormat)
from virtcam.imgproc import gaussian_blur
from virtcam.membuf import Arena

from conftest import FIXTURES, make_gray, make_rgb565, shift_replicate, smooth_scene


# ---------------------------------------------------------------------------
# grayscale conversion

def test_to_grayscale_known_values(arena):
    img = make_rgb565(arena, [[0xFFFF, 0x0000, 0xF800]])
    out = ft.to_grayscale(img, arena)
    assert out.pixels.tolist() == [[255, 0, 76]]
    out.free()
    img.free()


def test_to_grayscale_matches_formula(arena):
    rng = np.random.default_rng(21)
    words = rng.integers(0, 2**16, size=(9, 11), dtype=np.uint16)
    img = make_rgb565(arena, words)
    out = ft.to_grayscale(img, arena)
    r5 = (words >> 11) & 0x1F
    g6 = (words >> 5) & 0x3F
    b5 = words & 0x1F
    r8 = (r5 << 3) | (r5 >> 2)
    g8 = (g6 << 2) | (g6 >> 4)
    b8 = (b5 << 3) | (b5 >> 2)
    want = (77 * r8.astype(np.int64) + 150 * g8 + 29 * b8) >> 8
    assert (out.pixels == want).all()
    out.free()
    img.free()


def test_to_grayscale_rejects_gray_input(arena):
    img = make_gray(arena, np.zeros((2, 2), dtype=np.uint8))
    with pytest.raises(WrongFormat):
        ft.to_grayscale(img, arena)
    img.free()


# ---------------------------------------------------------------------------
# cascade

BRIGHT_DARK = (FIXTURES / "bright_dark.cascade").read_text()


def test_load_cascade_structure():
    c = ft.load_cascade(BRIGHT_DARK)
    assert (c.window_w, c.window_h) == (8, 8)
    assert len(c.stages) == 1
    stage = c.stages[0]
    assert stage.threshold == pytest.approx(0.5)
    assert len(stage.stumps) == 1
    stump = stage.stumps[0]
    assert stump.pass_value == pytest.approx(1.0)
    assert stump.fail_value == 0.0
    assert [(r.x, r.y, r.w, r.h) for r in stump.rects] == \
        [(0, 0, 8, 4), (0, 4, 8, 4)]
    assert stump.rects[0].weight == pytest.approx(1.0)
    assert stump.rects[1].weight == pytest.approx(-1.0)


def test_load_cascade_rejects_malformed():
    with pytest.raises(BadCascade):
        ft.load_cascade("cascade 8 8")
    with pytest.raises(BadCascade):
        ft.load_cascade("cascade 8 8 0")
    with pytest.raises(BadCascade):
        ft.load_cascade("cascade 8 8 1\nstage 1 0\nstump 1 0 65536 0\n"
                        "rect 4 4 8 8 65536")
    with pytest.raises(BadCascade):
        ft.load_cascade(BRIGHT_DARK + "\nextra")


def random_cascade(rng, win=8, nstages=2):
    lines = ["cascade %d %d %d" % (win, win, nstages)]
    for _ in range(nstages):
        nstumps = int(rng.integers(1, 4))
        lines.append("stage %d %d" % (nstumps, int(rng.integers(-2, 2)) * 16384))
        for _ in range(nstumps):
            nrects = int(rng.integers(1, 3))
            lines.append("stump %d %d %d %d"
                         % (nrects, int(rng.integers(-8, 8)) * 8192,
                            int(rng.integers(0, 3)) * 32768,
                            int(rng.integers(-2, 1)) * 32768))
            for _ in range(nrects):
                w = int(rng.integers(1, win + 1))
                h = int(rng.integers(1, win + 1))
                x = int(rng.integers(0, win - w + 1))
                y = int(rng.integers(0, win - h + 1))
                lines.append("rect %d %d %d %d %d"
                             % (x, y, w, h, int(rng.integers(-2, 3)) * 65536))
    return ft.load_cascade("\n".join(lines))


def brute_force_detect(px, cascade, scale_factor=1.25, step=2,
                       min_neighbors=3):
    """Same scan, but rectangle sums come straight from pixel slices."""
    p = px.astype(np.int64)

    def rsum(x, y, w, h):
        return int(p[y:y + h, x:x + w].sum())

    def rsqsum(x, y, w, h):
        block = p[y:y + h, x:x + w]
        return int((block * block).sum())

    hits = ft.scan_windows(px.shape[1], px.shape[0], cascade,
                           scale_factor, step, rsum, rsqsum)
    return ft.group_detections(hits, min_neighbors, px.shape[1], px.shape[0])


def detections_equal(a, b):
    if len(a) != len(b):
        return False
    return all(d.x == e.x and d.y == e.y and d.w == e.w and d.h == e.h
               and d.score == e.score for d, e in zip(a, b))


def test_haar_integral_equals_per_pixel_sums(arena):
    rng = np.random.default_rng(22)
    for _ in range(3):
        px = rng.integers(0, 256, size=(32, 32), dtype=np.uint8)
        cascade = random_cascade(rng)
        img = make_gray(arena, px)
        got = ft.haar_detect(img, cascade, min_neighbors=1)
        want = brute_force_detect(px, cascade, min_neighbors=1)
        assert detections_equal(got, want)
        img.free()


def test_haar_constant_image_has_no_detections(arena):
    img = make_gray(arena, np.full((32, 32), 77, dtype=np.uint8))
    assert ft.haar_detect(img, ft.load_cascade(BRIGHT_DARK)) == []
    img.free()


def test_haar_fixture_yields_exactly_one_detection(arena):
    from virtcam.imgio import read_image
    img = read_image((FIXTURES / "bright_dark.pgm").read_bytes(), arena)
    dets = ft.haar_detect(img, ft.load_cascade(BRIGHT_DARK))
    assert len(dets) == 1
    d = dets[0]
    assert d.x <= 28 and d.y <= 24 and d.x + d.w >= 36 and d.y + d.h >= 32
    assert d.score > 0
    img.free()


def test_haar_rejects_small_image_and_color(arena):
    cascade = ft.load_cascade(BRIGHT_DARK)
    small = make_gray(arena, np.zeros((4, 4), dtype=np.uint8))
    with pytest.raises(ImageSmallerThanWindow):
        ft.haar_detect(small, cascade)
    small.free()
    color = make_rgb565(arena, np.zeros((16, 16), dtype=np.uint16))
    with pytest.raises(WrongFormat):
        ft.haar_detect(color, cascade)
    color.free()


def test_haar_min_neighbors_filters_lone_hits(arena):
    from virtcam.imgio import read_image
    img = read_image((FIXTURES / "bright_dark.pgm").read_bytes(), arena)
    cascade = ft.load_cascade(BRIGHT_DARK)
    loose = ft.haar_detect(img, cascade, min_neighbors=1)
    strict = ft.haar_detect(img, cascade, min_neighbors=1000)
    assert len(loose) >= 1 and strict == []
    img.free()


# ---------------------------------------------------------------------------
# eye center

def disk_image(w, h, cx, cy, r, fg=20, bg=220):
    yy, xx = np.mgrid[0:h, 0:w]
    px = np.full((h, w), bg, dtype=np.uint8)
    px[(xx - cx) ** 2 + (yy - cy) ** 2 <= r * r] = fg
    return px


def test_eye_center_dark_disk(arena):
    img = make_gray(arena, disk_image(40, 40, 20, 22, 5))
    x, y = ft.find_eye_center(img, (0, 0, 40, 40))
    assert abs(x - 20) <= 1 and abs(y - 22) <= 1
    img.free()


def test_eye_center_roi_coordinates_are_absolute(arena):
    img = make_gray(arena, disk_image(64, 48, 40, 30, 4))
    x, y = ft.find_eye_center(img, (28, 18, 24, 24))
    assert abs(x - 40) <= 1 and abs(y - 30) <= 1
    img.free()


def test_eye_center_uniform_roi_degenerate(arena):
    img = make_gray(arena, np.full((20, 20), 128, dtype=np.uint8))
    with pytest.raises(DegenerateRoi):
        ft.find_eye_center(img, (2, 2, 10, 10))
    img.free()


def test_eye_center_roi_validation(arena):
    img = make_gray(arena, disk_image(20, 20, 10, 10, 3))
    from virtcam.errors import OutOfBounds
    for roi in [(-1, 0, 5, 5), (18, 18, 5, 5), (0, 0, 2, 2)]:
        with pytest.raises((OutOfBounds, BadRoi)):
            ft.find_eye_center(img, roi)
    img.free()


# ---------------------------------------------------------------------------
# FAST

CIRCLE16 = [(0, -3), (1, -3), (2, -2), (3, -1), (3, 0), (3, 1), (2, 2),
            (1, 3), (0, 3), (-1, 3), (-2, 2), (-3, 1), (-3, 0), (-3, -1),
            (-2, -2), (-1, -3)]


def fast_oracle_positions(px, t):
    """Segment test straight from the definition: 9 contiguous circle
    pixels all brighter than p+t or all darker than p-t."""
    h, w = px.shape
    out = set()
    p = px.astype(np.int32)
    for y in range(3, h - 3):
        for x in range(3, w - 3):
            center = p[y, x]
            ring = [p[y + dy, x + dx] for dx, dy in CIRCLE16]
            brighter = [v > center + t for v in ring]
            darker = [v < center - t for v in ring]
            for mask in (brighter, darker):
                doubled = mask + mask
                run = best = 0
                for m in doubled:
                    run = run + 1 if m else 0
                    best = max(best, run)
                if best >= min(9 + len(mask), 9) and best >= 9:
                    out.add((x, y))
                    break
    return out


def corner_image():
    px = np.full((24, 24), 200, dtype=np.uint8)
    px[12:, 12:] = 40
    return px


def test_fast_constant_image_empty(arena):
    img = make_gray(arena, np.full((16, 16), 99, dtype=np.uint8))
    assert ft.fast_detect(img, 20) == []
    img.free()


def test_fast_matches_segment_test_oracle(arena):
    rng = np.random.default_rng(23)
    px = rng.integers(0, 256, size=(24, 24), dtype=np.uint8)
    img = make_gray(arena, px)
    got = {(k.x, k.y) for k in ft.fast_detect(img, 20, nonmax=False)}
    assert got == fast_oracle_positions(px, 20)
    img.free()


def test_fast_detects_synthetic_corner(arena):
    img = make_gray(arena, corner_image())
    kps = ft.fast_detect(img, 20, nonmax=False)
    positions = {(k.x, k.y) for k in kps}
    assert positions == fast_oracle_positions(corner_image(), 20)
    assert any(abs(x - 12) <= 1 and abs(y - 12) <= 1 for x, y in positions)
    img.free()


def test_fast_invariant_under_global_offset(arena):
    rng = np.random.default_rng(24)
    px = rng.integers(0, 200, size=(20, 20), dtype=np.uint8)
    a = make_gray(arena, px)
    base = [(k.x, k.y, k.score) for k in ft.fast_detect(a, 15)]
    a.free()
    b = make_gray(arena, px + 10)
    shifted = [(k.x, k.y, k.score) for k in ft.fast_detect(b, 15)]
    b.free()
    assert base == shifted


def test_fast_mirror_invariance(arena):
    rng = np.random.default_rng(25)
    px = rng.integers(0, 256, size=(20, 20), dtype=np.uint8)
    img = make_gray(arena, px)
    base = {(k.x, k.y) for k in ft.fast_detect(img, 18, nonmax=False)}
    img.free()
    mirrored = make_gray(arena, px[:, ::-1])
    got = {(k.x, k.y) for k in ft.fast_detect(mirrored, 18, nonmax=False)}
    mirrored.free()
    assert got == {(px.shape[1] - 1 - x, y) for x, y in base}


def test_fast_nonmax_keeps_local_maxima_only(arena):
    rng = np.random.default_rng(26)
    px = rng.integers(0, 256, size=(24, 24), dtype=np.uint8)
    img = make_gray(arena, px)
    raw = ft.fast_detect(img, 10, nonmax=False)
    kept = ft.fast_detect(img, 10, nonmax=True)
    raw_map = {(k.x, k.y): k.score for k in raw}
    kept_set = {(k.x, k.y) for k in kept}
    assert kept_set <= set(raw_map)
    for k in kept:
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                neighbor = raw_map.get((k.x + dx, k.y + dy))
                if neighbor is not None and (dx, dy) != (0, 0):
                    assert k.score >= neighbor
    img.free()


def test_fast_score_is_max_passing_threshold(arena):
    img = make_gray(arena, corner_image())
    kps = ft.fast_detect(img, 20, nonmax=False)
    px = corner_image()
    for k in kps[:4]:
        assert (k.x, k.y) in fast_oracle_positions(px, k.score)
        assert (k.x, k.y) not in fast_oracle_positions(px, k.score + 1)
    img.free()


# ---------------------------------------------------------------------------
# ORB

def textured_image(seed, w=64, h=64):
    rng = np.random.default_rng(seed)
    return rng.integers(0, 256, size=(h, w), dtype=np.uint8)


def test_orb_self_distance_zero(arena):
    img = make_gray(arena, textured_image(27))
    kps = ft.fast_detect(img, 15)
    described = ft.orb_describe(img, kps)
    assert described, "fixture must produce keypoints"
    again = ft.orb_describe(img, ft.fast_detect(img, 15))
    for a, b in zip(described, again):
        assert a.descriptor == b.descriptor
        assert ft.hamming(a.descriptor, b.descriptor) == 0
    img.free()


def test_orb_drops_border_keypoints(arena):
    img = make_gray(arena, textured_image(28, 40, 40))
    kps = ft.fast_detect(img, 10, nonmax=False)
    described = ft.orb_describe(img, kps)
    for k in described:
        assert 16 <= k.x < 40 - 16 and 16 <= k.y < 40 - 16
        assert k.descriptor is not None and len(k.descriptor) == 32
    img.free()


def test_orb_translation_invariance(arena):
    patch = textured_image(29, 33, 33)
    canvas = np.full((96, 96), 128, dtype=np.uint8)
    canvas[20:53, 20:53] = patch
    canvas[50:83, 55:88] = patch
    img = make_gray(arena, canvas)
    k1 = ft.keypoints.Keypoint(20 + 16, 20 + 16, 0.0)
    k2 = ft.keypoints.Keypoint(55 + 16, 50 + 16, 0.0)
    out = ft.orb_describe(img, [k1, k2])
    assert len(out) == 2
    assert out[0].descriptor == out[1].descriptor
    assert abs(out[0].angle - out[1].angle) < 1e-12
    img.free()


def test_orb_rotation_90_stays_close(arena):
    # smooth texture: pixel-level noise decorrelates under the integer
    # resampling of the steered pattern and says nothing about steering
    patch = smooth_scene(np.random.default_rng(30), 41, 41, sigma=1.5)
    canvas = np.full((80, 80), 128, dtype=np.uint8)
    canvas[20:61, 20:61] = patch
    img = make_gray(arena, canvas)
    base = ft.orb_describe(img, [ft.keypoints.Keypoint(40, 40, 0.0)])
    img.free()
    rot = make_gray(arena, np.rot90(canvas).copy())
    rotated = ft.orb_describe(rot, [ft.keypoints.Keypoint(40, 40, 0.0)])
    rot.free()
    assert base and rotated
    assert ft.hamming(base[0].descriptor, rotated[0].descriptor) <= 64


def test_hamming_counts_bits():
    assert ft.hamming(bytes(32), bytes(32)) == 0
    assert ft.hamming(bytes(32), bytes([0xFF] * 32)) == 256
    a = bytes([0b1010] + [0] * 31)
    b = bytes([0b0110] + [0] * 31)
    assert ft.hamming(a, b) == 2


def match_oracle(a, b, max_distance=64, ratio=75):
    out = []
    for ia, ka in enumerate(a):
        dists = [ft.hamming(ka.descriptor, kb.descriptor) for kb in b]
        if not dists:
            continue
        best = min(range(len(dists)), key=lambda i: (dists[i], i))
        second = None
        for i, d in enumerate(dists):
            if i != best and (second is None or d < second):
                second = d
        if dists[best] > max_distance:
            continue
        if second is not None and dists[best] * 100 > ratio * second:
            continue
        out.append((ia, best, dists[best]))
    return out


def described_set(arena, seed):
    img = make_gray(arena, textured_image(seed))
    kps = ft.orb_describe(img, ft.fast_detect(img, 12))
    img.free()
    return kps


def test_match_identity(arena):
    kps = described_set(arena, 31)
    assert len(kps) >= 3
    got = ft.match_descriptors(kps, kps)
    assert got == [(i, i, 0) for i in range(len(kps))]


def test_match_empty_b(arena):
    kps = described_set(arena, 32)
    assert ft.match_descriptors(kps, []) == []


def test_match_equals_all_pairs_oracle(arena):
    a = described_set(arena, 33)
    b = described_set(arena, 34)
    assert len(a) >= 3 and len(b) >= 3
    for max_d, ratio in [(64, 75), (256, 100), (32, 90)]:
        got = ft.match_descriptors(a, b, max_distance=max_d, ratio=ratio)
        assert got == match_oracle(a, b, max_d, ratio)


def test_match_requires_descriptors(arena):
    img = make_gray(arena, textured_image(35))
    bare = ft.fast_detect(img, 15)
    described = ft.orb_describe(img, ft.fast_detect(img, 15))
    with pytest.raises(MissingDescriptors):
        ft.match_descriptors(bare, described)
    img.free()


# ---------------------------------------------------------------------------
# HOG

def test_hog_length_for_16x16():
    arena = Arena()
    img = make_gray(arena, textured_image(36, 16, 16))
    desc = ft.hog_descriptor(img, (0, 0, 16, 16))
    assert len(desc) == 36
    img.free()


def test_hog_constant_is_zero(arena):
    img = make_gray(arena, np.full((16, 16), 60, dtype=np.uint8))
    assert all(v == 0.0 for v in ft.hog_descriptor(img, (0, 0, 16, 16)))
    img.free()


def test_hog_vertical_edge_votes_bin_zero(arena):
    px = np.zeros((16, 16), dtype=np.uint8)
    px[:, 8:] = 255
    img = make_gray(arena, px)
    desc = np.array(ft.hog_descriptor(img, (0, 0, 16, 16)))
    bins = desc.reshape(4, 9)
    for cell in bins:
        if cell.any():
            assert cell.argmax() == 0
    img.free()


def test_hog_block_norms(arena):
    img = make_gray(arena, textured_image(37, 32, 24))
    desc = np.array(ft.hog_descriptor(img, (0, 0, 32, 24)))
    # 4x3 cells -> 3x2 blocks of 36 values
    assert len(desc) == 6 * 36
    for i in range(6):
        block = desc[i * 36:(i + 1) * 36]
        assert np.linalg.norm(block) <= 1 + 1e-6
        assert (block >= 0).all()
    img.free()


def test_hog_roi_validation(arena):
    img = make_gray(arena, np.zeros((32, 32), dtype=np.uint8))
    for roi in [(0, 0, 12, 16), (0, 0, 16, 8), (0, 0, 8, 8), (20, 20, 16, 16)]:
        with pytest.raises(BadRoi):
            ft.hog_descriptor(img, roi)
    img.free()


# ---------------------------------------------------------------------------
# NCC

def ncc_oracle(img_px, tmpl_px, x, y):
    th, tw = tmpl_px.shape
    f = img_px[y:y + th, x:x + tw].astype(np.float64)
    t = tmpl_px.astype(np.float64)
    fz = f - f.mean()
    tz = t - t.mean()
    den = math.sqrt((fz * fz).sum() * (tz * tz).sum())
    if den == 0:
        return 0.0
    return float((fz * tz).sum() / den)


def test_ncc_self_match_is_one(arena):
    scene = smooth_scene(np.random.default_rng(38), 48, 48)
    img = make_gray(arena, scene)
    tmpl = make_gray(arena, scene[10:26, 14:30].copy())
    x, y, score = ft.ncc_match_exhaustive(img, tmpl)
    assert (x, y) == (14, 10)
    assert abs(score - 1.0) <= 1e-6
    tmpl.free()
    img.free()


def test_ncc_constant_template_scores_zero(arena):
    img = make_gray(arena, textured_image(39, 32, 32))
    tmpl = make_gray(arena, np.full((8, 8), 50, dtype=np.uint8))
    x, y, score = ft.ncc_match_exhaustive(img, tmpl)
    assert score == 0.0 and (x, y) == (0, 0)
    tmpl.free()
    img.free()


def test_ncc_matches_double_loop_oracle(arena):
    rng = np.random.default_rng(40)
    img_px = rng.integers(0, 256, size=(24, 26), dtype=np.uint8)
    tmpl_px = rng.integers(0, 256, size=(7, 5), dtype=np.uint8)
    img = make_gray(arena, img_px)
    tmpl = make_gray(arena, tmpl_px)
    scores = ft.ncc_scores(img, tmpl)
    assert scores.shape == (24 - 7 + 1, 26 - 5 + 1)
    for y in range(scores.shape[0]):
        for x in range(scores.shape[1]):
            assert abs(scores[y, x] - ncc_oracle(img_px, tmpl_px, x, y)) <= 1e-6
            assert -1 - 1e-9 <= scores[y, x] <= 1 + 1e-9
    tmpl.free()
    img.free()


def test_ncc_template_too_large(arena):
    img = make_gray(arena, np.zeros((8, 8), dtype=np.uint8))
    tmpl = make_gray(arena, np.zeros((9, 9), dtype=np.uint8))
    with pytest.raises(TemplateTooLarge):
        ft.ncc_match_exhaustive(img, tmpl)
    tmpl.free()
    img.free()


def test_ncc_roi_limits_search(arena):
    scene = smooth_scene(np.random.default_rng(41), 40, 40)
    img = make_gray(arena, scene)
    tmpl = make_gray(arena, scene[20:30, 22:32].copy())
    x, y, _ = ft.ncc_match_exhaustive(img, tmpl, roi=(0, 0, 18, 18))
    assert x + 10 <= 18 and y + 10 <= 18
    tmpl.free()
    img.free()


def test_ds_equals_exhaustive_on_unimodal(arena):
    scene = smooth_scene(np.random.default_rng(42), 64, 64)
    img = make_gray(arena, scene)
    tmpl = make_gray(arena, scene[24:40, 30:46].copy())
    ex_stats, ds_stats = {}, {}
    ex = ft.ncc_match_exhaustive(img, tmpl, stats=ex_stats)
    ds = ft.ncc_match_ds(img, tmpl, (24, 24), stats=ds_stats)
    assert ds == ex
    assert ds_stats["evaluations"] < ex_stats["evaluations"]
    tmpl.free()
    img.free()


def test_ds_fixed_point_at_optimum(arena):
    scene = smooth_scene(np.random.default_rng(43), 48, 48)
    img = make_gray(arena, scene)
    tmpl = make_gray(arena, scene[8:24, 12:28].copy())
    x, y, score = ft.ncc_match_ds(img, tmpl, (12, 8))
    assert (x, y) == (12, 8)
    assert abs(score - 1.0) <= 1e-6
    tmpl.free()
    img.free()


# ---------------------------------------------------------------------------
# optical flow

def test_flow_identity(arena):
    scene = smooth_scene(np.random.default_rng(44), 40, 48)
    a = make_gray(arena, scene)
    b = make_gray(arena, scene.copy())
    mv = ft.optical_flow(a, b)
    assert (mv.dx, mv.dy) == (0, 0)
    assert mv.response >= 1 - 1e-6
    b.free()
    a.free()


def test_flow_recovers_shift(arena):
    scene = smooth_scene(np.random.default_rng(45), 48, 64)
    a = make_gray(arena, scene)
    b = make_gray(arena, shift_replicate(scene, 3, 1))
    mv = ft.optical_flow(a, b)
    assert (mv.dx, mv.dy) == (3, 1)
    b.free()
    a.free()


def test_flow_constant_images(arena):
    a = make_gray(arena, np.full((32, 32), 128, dtype=np.uint8))
    b = make_gray(arena, np.full((32, 32), 128, dtype=np.uint8))
    mv = ft.optical_flow(a, b)
    assert (mv.dx, mv.dy) == (0, 0) and mv.response == 0.0
    b.free()
    a.free()


def test_flow_validates_inputs(arena):
    a = make_gray(arena, np.zeros((32, 32), dtype=np.uint8))
    b = make_gray(arena, np.zeros((32, 40), dtype=np.uint8))
    with pytest.raises(DimensionMismatch):
        ft.optical_flow(a, b)
    b.free()
    small = make_gray(arena, np.zeros((12, 12), dtype=np.uint8))
    with pytest.raises(Exception):
        ft.optical_flow(a, small, radius=8)
    small.free()
    a.free()


# ---------------------------------------------------------------------------
# canny

def canny_oracle(px, low, high):
    """Scalar-loop restatement of the pipeline: shared 5-tap blur, Sobel,
    L1 magnitude, direction by the documented tan(22.5) rational (ties to
    the axis), NMS keeping mag >= forward and mag > backward with
    off-image neighbors as 0, BFS hysteresis."""
    arena = Arena()
    img = make_gray(arena, px)
    blurred_img = gaussian_blur(img, 5, arena)
    blurred = blurred_img.pixels.astype(np.int64)
    blurred_img.free()
    img.free()

    h, w = blurred.shape
    p = np.pad(blurred, 1, mode="edge")
    mag = np.zeros((h, w), dtype=np.int64)
    fwd_off = np.empty((h, w), dtype=object)
    for y in range(h):
        for x in range(w):
            win = p[y:y + 3, x:x + 3]
            gx = int(win[0, 2] + 2 * win[1, 2] + win[2, 2]
                     - win[0, 0] - 2 * win[1, 0] - win[2, 0])
            gy = int(win[2, 0] + 2 * win[2, 1] + win[2, 2]
                     - win[0, 0] - 2 * win[0, 1] - win[0, 2])
            ax, ay = abs(gx), abs(gy)
            mag[y, x] = ax + ay
            if ay * 10000 <= ax * 4142:
                fwd_off[y, x] = (1, 0)
            elif ax * 10000 <= ay * 4142:
                fwd_off[y, x] = (0, 1)
            elif (gx >= 0) == (gy >= 0):
                fwd_off[y, x] = (1, 1)
            else:
                fwd_off[y, x] = (1, -1)

    def mag_at(x, y):
        if 0 <= x < w and 0 <= y < h:
            return int(mag[y, x])
        return 0

    keep = np.zeros((h, w), dtype=bool)
    for y in range(h):
        for x in range(w):
            dx, dy = fwd_off[y, x]
            m = int(mag[y, x])
            if m >= mag_at(x + dx, y + dy) and m > mag_at(x - dx, y - dy):
                keep[y, x] = True

    strong = keep & (mag >= high)
    weak = keep & (mag >= low)
    out = np.zeros((h, w), dtype=np.uint8)
    stack = list(zip(*np.nonzero(strong)))
    for y, x in stack:
        out[y, x] = 255
    while stack:
        y, x = stack.pop()
        for dy in (-1, 0, 1):
            for dx in (-1, 0, 1):
                ny, nx = y + dy, x + dx
                if 0 <= ny < h and 0 <= nx < w and weak[ny, nx] \
                        and out[ny, nx] == 0:
                    out[ny, nx] = 255
                    stack.append((ny, nx))
    return out, mag


def test_canny_constant_image(arena):
    img = make_gray(arena, np.full((24, 24), 80, dtype=np.uint8))
    edges = ft.canny(img, 40, 80, arena)
    assert not edges.pixels.any()
    edges.free()
    img.free()


def test_canny_output_is_binary_and_above_low(arena):
    rng = np.random.default_rng(46)
    px = smooth_scene(rng, 32, 32, sigma=2.0)
    img = make_gray(arena, px)
    edges = ft.canny(img, 30, 70, arena)
    vals = np.unique(edges.pixels)
    assert set(vals.tolist()) <= {0, 255}
    _, mag = canny_oracle(px, 30, 70)
    ys, xs = np.nonzero(edges.pixels)
    assert (mag[ys, xs] >= 30).all()
    edges.free()
    img.free()


def test_canny_matches_pipeline_oracle(arena):
    for seed, (low, high) in [(47, (30, 70)), (48, (50, 100))]:
        px = smooth_scene(np.random.default_rng(seed), 28, 36, sigma=2.0)
        img = make_gray(arena, px)
        edges = ft.canny(img, low, high, arena)
        want, _ = canny_oracle(px, low, high)
        assert (edges.pixels == want).all()
        edges.free()
        img.free()


def test_canny_vertical_step_edge(arena):
    px = np.zeros((32, 64), dtype=np.uint8)
    px[:, 32:] = 255
    img = make_gray(arena, px)
    edges = ft.canny(img, 50, 100, arena)
    want, _ = canny_oracle(px, 50, 100)
    assert (edges.pixels == want).all()
    cols = np.unique(np.nonzero(edges.pixels)[1])
    assert len(cols) == 1 and abs(int(cols[0]) - 32) <= 1
    edges.free()
    img.free()


def test_canny_validates_thresholds(arena):
    img = make_gray(arena, np.zeros((16, 16), dtype=np.uint8))
    with pytest.raises(BadThresholds):
        ft.canny(img, 100, 50, arena)
    img.free()


def test_canny_raising_low_shrinks_edges(arena):
    px = smooth_scene(np.random.default_rng(49), 32, 32, sigma=2.0)
    img = make_gray(arena, px)
    wide = ft.canny(img, 20, 90, arena)
    narrow = ft.canny(img, 90, 90, arena)
    assert set(map(tuple, np.argwhere(narrow.pixels))) <= \
        set(map(tuple, np.argwhere(wide.pixels)))
    narrow.free()
    wide.free()
    img.free()


# ---------------------------------------------------------------------------
# hough

def edge_map(arena, px):
    img = make_gray(arena, (px * 255).astype(np.uint8))
    return img


def test_hough_horizontal_segment(arena):
    px = np.zeros((64, 64), dtype=np.uint8)
    px[10, 5:56] = 1
    edges = edge_map(arena, px)
    hits = ft.hough_lines(edges, threshold=20)
    assert hits
    top = hits[0]
    assert (top.rho, top.theta) == (10, 90)
    assert top.votes == 51
    edges.free()


def test_hough_vertical_segment(arena):
    px = np.zeros((64, 64), dtype=np.uint8)
    px[5:50, 20] = 1
    edges = edge_map(arena, px)
    top = ft.hough_lines(edges, threshold=20)[0]
    assert (top.rho, top.theta) == (20, 0)
    assert top.votes == 45
    edges.free()


def test_hough_crossing_lines(arena):
    px = np.zeros((64, 64), dtype=np.uint8)
    px[22, :] = 1
    px[:, 41] = 1
    edges = edge_map(arena, px)
    hits = ft.hough_lines(edges, threshold=30)
    found = {(h.rho, h.theta) for h in hits[:4]}
    assert any(abs(r - 22) <= 1 and abs(t - 90) <= 1 for r, t in found)
    assert any(abs(r - 41) <= 1 and (t <= 1 or t >= 179) for r, t in found)
    edges.free()


def test_hough_top_cell_vote_mass(arena):
    # rasterized gentle diagonals: the top accumulator cell keeps >= 90%
    # of the pixels (steeper off-grid angles smear across rho bins)
    for slope in (0.2679, 1.0):
        px = np.zeros((64, 64), dtype=np.uint8)
        n = 0
        for x in range(4, 60):
            y = int(round(slope * x + 3))
            if 0 <= y < 64:
                px[y, x] = 1
                n += 1
        edges = edge_map(arena, px)
        hits = ft.hough_lines(edges, threshold=5)
        assert hits[0].votes >= 0.9 * n, slope
        edges.free()


def test_hough_sorted_by_votes(arena):
    px = np.zeros((48, 48), dtype=np.uint8)
    px[10, 4:44] = 1
    px[30, 10:30] = 1
    edges = edge_map(arena, px)
    hits = ft.hough_lines(edges, threshold=10)
    votes = [h.votes for h in hits]
    assert votes == sorted(votes, reverse=True)
    assert hits[0].rho == 10 and hits[0].theta == 90
    edges.free()


def test_hough_empty_map(arena):
    edges = make_gray(arena, np.zeros((32, 32), dtype=np.uint8))
    assert ft.hough_lines(edges, threshold=1) == []
    edges.free()


def test_hough_step_parameters(arena):
    px = np.zeros((64, 64), dtype=np.uint8)
    px[10, 5:56] = 1
    edges = edge_map(arena, px)
    hits = ft.hough_lines(edges, threshold=20, theta_step=5, rho_step=2)
    assert hits
    top = hits[0]
    assert abs(top.theta - 90) <= 5 and abs(top.rho - 10) <= 2
    edges.free()


def test_hough_rejects_color(arena):
    img = make_rgb565(arena, np.zeros((8, 8), dtype=np.uint16))
    with pytest.raises(WrongFormat):
        ft.hough_lines(img, 5)
    img.free()

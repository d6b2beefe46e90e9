import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from virtcam.errors import NotTopOfStack, OutOfBounds, OutOfMemory, WrongFormat
from virtcam.membuf import (DEFAULT_ARENA_BYTES, Arena, Image, IntegralImage,
                            PixelFormat, integral_image, rect_sqsum, rect_sum)

from conftest import make_gray


def test_default_arena_capacity():
    assert DEFAULT_ARENA_BYTES == 524288
    assert Arena().capacity == 524288


def test_alloc_is_aligned_and_zeroed(arena):
    a = arena.alloc(5)
    assert a.offset % 4 == 0
    assert a.aligned == 8
    assert arena.used == 8
    assert (arena.view(a, np.uint8) == 0).all()
    b = arena.alloc(3)
    assert b.offset == 8
    arena.free(b)
    arena.free(a)
    assert arena.used == 0


def test_alloc_zeroes_recycled_memory(arena):
    a = arena.alloc(16)
    arena.view(a, np.uint8)[:] = 0xAB
    arena.free(a)
    b = arena.alloc(16)
    assert (arena.view(b, np.uint8) == 0).all()
    arena.free(b)


def test_lifo_free_order_enforced(arena):
    a = arena.alloc(8)
    b = arena.alloc(8)
    with pytest.raises(NotTopOfStack):
        arena.free(a)
    arena.free(b)
    arena.free(a)
    assert arena.used == 0


def test_double_free_rejected(arena):
    a = arena.alloc(8)
    arena.free(a)
    with pytest.raises(NotTopOfStack):
        arena.free(a)


def test_out_of_memory_leaves_arena_unchanged():
    arena = Arena(64)
    a = arena.alloc(32)
    used = arena.used
    with pytest.raises(OutOfMemory):
        arena.alloc(64)
    assert arena.used == used
    arena.free(a)


def test_exact_fit_succeeds():
    arena = Arena(64)
    a = arena.alloc(64)
    assert arena.used == 64
    arena.free(a)


def test_image_layout(arena):
    gray = Image(arena, 4, 3, PixelFormat.GRAYSCALE8)
    assert gray.pixels.shape == (3, 4)
    assert gray.pixels.dtype == np.uint8
    assert gray.allocation.length == 12
    color = Image(arena, 4, 3, PixelFormat.RGB565)
    assert color.pixels.dtype == np.uint16
    assert color.allocation.length == 24
    color.free()
    gray.free()
    assert arena.used == 0


def test_rgb565_pixels_are_little_endian(arena):
    img = Image(arena, 2, 1, PixelFormat.RGB565)
    img.pixels[0, 0] = 0x1234
    raw = arena.view(img.allocation, np.uint8)
    assert raw[0] == 0x34 and raw[1] == 0x12
    img.free()


def test_image_get_set_bounds(arena):
    img = make_gray(arena, np.zeros((3, 4), dtype=np.uint8))
    img.set(2, 1, 77)
    assert img.get(2, 1) == 77
    for x, y in [(-1, 0), (4, 0), (0, 3)]:
        with pytest.raises(OutOfBounds):
            img.get(x, y)
        with pytest.raises(OutOfBounds):
            img.set(x, y, 0)
    img.free()


def test_vga_rgb565_does_not_fit_default_arena():
    arena = Arena()
    with pytest.raises(OutOfMemory):
        Image(arena, 640, 480, PixelFormat.RGB565)
    assert arena.used == 0
    img = Image(arena, 640, 480, PixelFormat.GRAYSCALE8)
    img.free()
    img = Image(arena, 320, 240, PixelFormat.RGB565)
    img.free()
    assert arena.used == 0


def test_integral_tables_dtypes(arena):
    img = make_gray(arena, np.full((3, 4), 7, dtype=np.uint8))
    ii = integral_image(img, with_squares=True)
    assert isinstance(ii, IntegralImage)
    assert ii.sums.dtype == np.uint32
    assert ii.sqsums.dtype == np.uint64
    assert rect_sum(ii, 0, 0, 4, 3) == 7 * 12
    assert rect_sqsum(ii, 0, 0, 4, 3) == 49 * 12
    ii.free()
    img.free()


def test_integral_requires_grayscale(arena):
    img = Image(arena, 4, 4, PixelFormat.RGB565)
    with pytest.raises(WrongFormat):
        integral_image(img)
    img.free()


def test_integral_max_values_do_not_overflow(arena):
    img = make_gray(arena, np.full((64, 64), 255, dtype=np.uint8))
    ii = integral_image(img, with_squares=True)
    assert rect_sum(ii, 0, 0, 64, 64) == 255 * 64 * 64
    assert rect_sqsum(ii, 0, 0, 64, 64) == 255 * 255 * 64 * 64
    ii.free()
    img.free()


@settings(deadline=None, max_examples=60)
@given(st.data())
def test_rect_sum_matches_brute_force(data):
    w = data.draw(st.integers(1, 24), label="w")
    h = data.draw(st.integers(1, 24), label="h")
    seed = data.draw(st.integers(0, 2**32 - 1), label="seed")
    rng = np.random.default_rng(seed)
    px = rng.integers(0, 256, size=(h, w), dtype=np.uint8)
    x = data.draw(st.integers(0, w - 1), label="x")
    y = data.draw(st.integers(0, h - 1), label="y")
    rw = data.draw(st.integers(1, w - x), label="rw")
    rh = data.draw(st.integers(1, h - y), label="rh")

    arena = Arena()
    img = make_gray(arena, px)
    ii = integral_image(img, with_squares=True)
    block = px[y:y + rh, x:x + rw].astype(np.int64)
    assert rect_sum(ii, x, y, rw, rh) == int(block.sum())
    assert rect_sqsum(ii, x, y, rw, rh) == int((block * block).sum())
    ii.free()
    img.free()
    assert arena.used == 0

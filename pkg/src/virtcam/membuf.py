"""Fixed-budget memory arena and image containers.

The arena models the MCU's main SRAM block: a single fixed-size byte
buffer that holds the frame buffer, integral tables and temporary images.
Allocations are strictly LIFO, 4-byte aligned, and zeroed on hand-out, so
out-of-memory behavior is reproducible.
"""

import enum

import numpy as np

from .errors import NotTopOfStack, OutOfBounds, OutOfMemory, WrongFormat

DEFAULT_ARENA_BYTES = 512 * 1024  # 524288


class PixelFormat(enum.Enum):
    GRAYSCALE8 = "GRAYSCALE8"
    RGB565 = "RGB565"

    @property
    def bytes_per_pixel(self):
        return 1 if self is PixelFormat.GRAYSCALE8 else 2


def _align4(n):
    return (n + 3) & ~3


class Allocation:
    """Handle for one live arena region."""

    __slots__ = ("arena", "offset", "length", "aligned", "live")

    def __init__(self, arena, offset, length, aligned):
        self.arena = arena
        self.offset = offset
        self.length = length
        self.aligned = aligned
        self.live = True


class Arena:
    """LIFO allocator over a fixed byte budget."""

    def __init__(self, capacity=DEFAULT_ARENA_BYTES):
        if capacity <= 0:
            raise ValueError("arena capacity must be positive")
        self.capacity = capacity
        self.buf = bytearray(capacity)
        self._stack = []

    @property
    def used(self):
        return sum(a.aligned for a in self._stack)

    def alloc(self, length):
        if length <= 0:
            raise ValueError("allocation length must be positive")
        aligned = _align4(length)
        offset = self._stack[-1].offset + self._stack[-1].aligned if self._stack else 0
        if offset + aligned > self.capacity:
            raise OutOfMemory(
                "arena exhausted: need %d bytes, %d of %d in use"
                % (aligned, self.used, self.capacity)
            )
        self.buf[offset:offset + aligned] = bytes(aligned)
        handle = Allocation(self, offset, length, aligned)
        self._stack.append(handle)
        return handle

    def free(self, handle):
        if not self._stack or self._stack[-1] is not handle or not handle.live:
            raise NotTopOfStack("allocation is not the top of the arena stack")
        self._stack.pop()
        handle.live = False

    def view(self, handle, dtype):
        """Writable numpy view over a live allocation."""
        if not handle.live:
            raise NotTopOfStack("allocation already freed")
        itemsize = np.dtype(dtype).itemsize
        count = handle.length // itemsize
        return np.frombuffer(self.buf, dtype=dtype, count=count, offset=handle.offset)


class Image:
    """Owned 2-D pixel grid backed by an arena allocation.

    (0,0) is top-left, x grows right, y grows down. GRAYSCALE8 stores one
    byte per pixel, RGB565 one little-endian uint16 per pixel.
    """

    def __init__(self, arena, width, height, fmt):
        if width < 1 or height < 1:
            raise ValueError("image dimensions must be >= 1")
        self.arena = arena
        self.width = width
        self.height = height
        self.format = fmt
        self.allocation = arena.alloc(width * height * fmt.bytes_per_pixel)

    @property
    def pixels(self):
        """(height, width) numpy view: uint8 for gray, uint16 for RGB565."""
        dtype = np.uint8 if self.format is PixelFormat.GRAYSCALE8 else np.dtype("<u2")
        return self.arena.view(self.allocation, dtype).reshape(self.height, self.width)

    def check_bounds(self, x, y):
        if not (0 <= x < self.width and 0 <= y < self.height):
            raise OutOfBounds(
                "pixel (%d,%d) outside %dx%d image" % (x, y, self.width, self.height)
            )

    def get(self, x, y):
        self.check_bounds(x, y)
        return int(self.pixels[y, x])

    def set(self, x, y, value):
        self.check_bounds(x, y)
        self.pixels[y, x] = value

    def free(self):
        self.arena.free(self.allocation)


def image_new(arena, width, height, fmt):
    """Zero-initialized image allocated from the arena."""
    return Image(arena, width, height, fmt)


class IntegralImage:
    """Summed-area table: 32-bit running sums, optional 64-bit squared sums.

    sums[y, x] = sum of pixels in [0..x] x [0..y]. 32 bits never overflow
    up to 640x480 GRAYSCALE8 (640*480*255 < 2**32); squared sums need 64.
    """

    def __init__(self, arena, width, height, with_squares):
        self.arena = arena
        self.width = width
        self.height = height
        self._sum_alloc = arena.alloc(width * height * 4)
        self._sq_alloc = None
        if with_squares:
            try:
                self._sq_alloc = arena.alloc(width * height * 8)
            except OutOfMemory:
                arena.free(self._sum_alloc)
                raise

    @property
    def sums(self):
        return self.arena.view(self._sum_alloc, np.uint32).reshape(self.height, self.width)

    @property
    def sqsums(self):
        if self._sq_alloc is None:
            return None
        return self.arena.view(self._sq_alloc, np.uint64).reshape(self.height, self.width)

    def free(self):
        if self._sq_alloc is not None:
            self.arena.free(self._sq_alloc)
            self._sq_alloc = None
        self.arena.free(self._sum_alloc)


def integral_image(img, with_squares=False):
    """Build the summed-area table(s) for a GRAYSCALE8 image."""
    if img.format is not PixelFormat.GRAYSCALE8:
        raise WrongFormat("integral image requires GRAYSCALE8 input")
    ii = IntegralImage(img.arena, img.width, img.height, with_squares)
    px = img.pixels
    np.cumsum(np.cumsum(px, axis=0, dtype=np.uint32), axis=1,
              dtype=np.uint32, out=ii.sums)
    if with_squares:
        sq = px.astype(np.uint64) ** 2
        np.cumsum(np.cumsum(sq, axis=0, dtype=np.uint64), axis=1,
                  dtype=np.uint64, out=ii.sqsums)
    return ii


def _table_rect(table, x, y, w, h):
    total = int(table[y + h - 1, x + w - 1])
    if x > 0:
        total -= int(table[y + h - 1, x - 1])
    if y > 0:
        total -= int(table[y - 1, x + w - 1])
    if x > 0 and y > 0:
        total += int(table[y - 1, x - 1])
    return total


def rect_sum(ii, x, y, w, h):
    """Sum of pixels over [x, x+w) x [y, y+h) via 4 table lookups."""
    if w < 1 or h < 1 or x < 0 or y < 0 or x + w > ii.width or y + h > ii.height:
        raise OutOfBounds("rect (%d,%d,%d,%d) outside %dx%d table"
                          % (x, y, w, h, ii.width, ii.height))
    return _table_rect(ii.sums, x, y, w, h)


def rect_sqsum(ii, x, y, w, h):
    """Sum of squared pixels over the rect; requires with_squares tables."""
    if ii.sqsums is None:
        raise ValueError("integral image was built without squared sums")
    if w < 1 or h < 1 or x < 0 or y < 0 or x + w > ii.width or y + h > ii.height:
        raise OutOfBounds("rect (%d,%d,%d,%d) outside %dx%d table"
                          % (x, y, w, h, ii.width, ii.height))
    return _table_rect(ii.sqsums, x, y, w, h)

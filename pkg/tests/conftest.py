import pathlib

import numpy as np
import pytest

from virtcam.membuf import Arena, Image, PixelFormat

FIXTURES = pathlib.Path(__file__).parent / "fixtures"
CORPUS = pathlib.Path(__file__).parent / "corpus"
VECTORS = pathlib.Path(__file__).parent / "vectors"


@pytest.fixture
def arena():
    return Arena()


def make_gray(arena, px):
    px = np.asarray(px, dtype=np.uint8)
    img = Image(arena, px.shape[1], px.shape[0], PixelFormat.GRAYSCALE8)
    img.pixels[:] = px
    return img


def make_rgb565(arena, words):
    words = np.asarray(words, dtype=np.uint16)
    img = Image(arena, words.shape[1], words.shape[0], PixelFormat.RGB565)
    img.pixels[:] = words
    return img


def shift_replicate(px, dx, dy):
    """Translate px by (dx, dy), repeating edge pixels into the vacancy."""
    h, w = px.shape[:2]
    ys = np.clip(np.arange(h) - dy, 0, h - 1)
    xs = np.clip(np.arange(w) - dx, 0, w - 1)
    return px[ys][:, xs]


def smooth_scene(rng, h, w, sigma=3.0):
    """Low-frequency test image: seeded noise put through a box cascade.

    Repeated box filtering approximates a Gaussian well enough to leave a
    broad, single-peaked correlation surface, which keeps gradient-style
    searches honest without hand-placing structure.
    """
    px = rng.integers(0, 256, size=(h, w)).astype(np.float64)
    k = max(3, int(sigma) * 2 + 1)
    for _ in range(3):
        acc = np.cumsum(np.pad(px, ((0, 0), (k, 0)), mode="edge"), axis=1)
        px = (acc[:, k:] - acc[:, :-k]) / k
        acc = np.cumsum(np.pad(px, ((k, 0), (0, 0)), mode="edge"), axis=0)
        px = (acc[k:, :] - acc[:-k, :]) / k
    px = px - px.min()
    peak = px.max()
    if peak > 0:
        px = px * (255.0 / peak)
    return px.astype(np.uint8)

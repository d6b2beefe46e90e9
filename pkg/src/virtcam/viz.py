"""Matplotlib overlays for the CLI report path.

Each helper renders one figure to a file next to the textual output.
Imported lazily by the CLI so plain runs never pay the matplotlib
import cost.
"""

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
from matplotlib.patches import Rectangle


def _show(ax, px, title=None):
    ax.imshow(px, cmap="gray", vmin=0, vmax=255, interpolation="nearest")
    ax.set_axis_off()
    if title:
        ax.set_title(title, fontsize=9)


def save_detections_figure(px, detections, path):
    fig, ax = plt.subplots(figsize=(6, 6 * px.shape[0] / max(1, px.shape[1])))
    _show(ax, px)
    for d in detections:
        ax.add_patch(Rectangle((d.x - 0.5, d.y - 0.5), d.w, d.h,
                               fill=False, edgecolor="lime", linewidth=1.5))
        ax.text(d.x, d.y - 1, "%.2f" % d.score, color="lime", fontsize=7)
    fig.savefig(path, bbox_inches="tight")
    plt.close(fig)


def save_matches_figure(px_a, px_b, kps_a, kps_b, pairs, path):
    import numpy as np
    h = max(px_a.shape[0], px_b.shape[0])
    canvas = np.zeros((h, px_a.shape[1] + px_b.shape[1]), dtype=px_a.dtype)
    canvas[:px_a.shape[0], :px_a.shape[1]] = px_a
    canvas[:px_b.shape[0], px_a.shape[1]:] = px_b
    off = px_a.shape[1]
    fig, ax = plt.subplots(figsize=(10, 10 * h / max(1, canvas.shape[1])))
    _show(ax, canvas)
    for ai, bi, dist in pairs:
        ka, kb = kps_a[ai], kps_b[bi]
        ax.plot([ka.x, kb.x + off], [ka.y, kb.y],
                linewidth=0.8, color="cyan", alpha=0.8)
    ax.plot([k.x for k in kps_a], [k.y for k in kps_a], ".", color="red",
            markersize=3)
    ax.plot([k.x + off for k in kps_b], [k.y for k in kps_b], ".",
            color="red", markersize=3)
    fig.savefig(path, bbox_inches="tight")
    plt.close(fig)


def save_edges_figure(px, edge_px, path):
    fig, axes = plt.subplots(1, 2, figsize=(10, 5))
    _show(axes[0], px, "input")
    _show(axes[1], edge_px, "edges")
    fig.savefig(path, bbox_inches="tight")
    plt.close(fig)


def save_lines_figure(px, hits, path):
    h, w = px.shape
    fig, ax = plt.subplots(figsize=(6, 6 * h / max(1, w)))
    _show(ax, px)
    diag = math.hypot(w, h)
    for hit in hits:
        theta = math.radians(hit.theta)
        c, s = math.cos(theta), math.sin(theta)
        # Point closest to origin, extended along the line direction.
        x0, y0 = hit.rho * c, hit.rho * s
        dx, dy = -s, c
        ax.plot([x0 - diag * dx, x0 + diag * dx],
                [y0 - diag * dy, y0 + diag * dy],
                color="yellow", linewidth=1.0)
    ax.set_xlim(-0.5, w - 0.5)
    ax.set_ylim(h - 0.5, -0.5)
    fig.savefig(path, bbox_inches="tight")
    plt.close(fig)


def save_flow_figure(prev_px, next_px, dx, dy, response, path):
    fig, axes = plt.subplots(1, 2, figsize=(10, 5))
    _show(axes[0], prev_px, "previous")
    _show(axes[1], next_px, "next (dx=%d dy=%d r=%.3f)" % (dx, dy, response))
    h, w = prev_px.shape
    axes[1].annotate("", xy=(w / 2 + dx * 4, h / 2 + dy * 4),
                     xytext=(w / 2, h / 2),
                     arrowprops=dict(arrowstyle="->", color="red",
                                     linewidth=2))
    fig.savefig(path, bbox_inches="tight")
    plt.close(fig)

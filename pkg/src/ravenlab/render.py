"""Deterministic rasterizer: symbolic panels to uint8 grayscale images.

Everything that could vary across platforms is pinned down:

* slot geometry is exact (Fractions) and converted once to 1/256-pixel
  fixed point with round-half-away-from-zero;
* polygon vertices use hardcoded unit-circle literals (no runtime trig);
* polygon interiors are filled scanline-by-scanline with exact rational
  edge intersections and an even-odd pixel-center test;
* outlines are Bresenham lines / midpoint circles in integer pixels.

Conventions: background 255, outline 0, fill intensity 230 - 20*color.
A shape's circumradius is (0.30 + 0.10*size) times the slot's half extent.
Components paint in order, so inner components overdraw outer ones.
"""
from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterable, List, Sequence, Tuple

import numpy as np

from .errors import UnsupportedSize
from .puzzles.types import Box, Config, Panel, Puzzle, component_layout

__all__ = [
    "render_panel",
    "render_puzzle",
    "fill_intensity",
    "shape_radius_fp",
    "SUPPORTED_SIZES",
    "FP",
]

SUPPORTED_SIZES = (40, 80)
FP = 256  # fixed-point subpixel scale

# Unit-polygon vertices for types 0..3 (triangle, square, pentagon, hexagon),
# first vertex pointing up (image y axis grows downward).  Values are
# round-trip float64 literals; exact where the ideal value is exact.
_POLY = {
    3: ((0.0, -1.0), (0.8660254037844387, 0.5), (-0.8660254037844387, 0.5)),
    4: ((0.0, -1.0), (1.0, 0.0), (0.0, 1.0), (-1.0, 0.0)),
    5: (
        (0.0, -1.0),
        (0.9510565162951535, -0.3090169943749474),
        (0.5877852522924731, 0.8090169943749475),
        (-0.5877852522924731, 0.8090169943749475),
        (-0.9510565162951535, -0.3090169943749474),
    ),
    6: (
        (0.0, -1.0),
        (0.8660254037844387, -0.5),
        (0.8660254037844387, 0.5),
        (0.0, 1.0),
        (-0.8660254037844387, 0.5),
        (-0.8660254037844387, -0.5),
    ),
}


def fill_intensity(color: int) -> int:
    return 230 - 20 * color


def _round_half_away(x) -> int:
    """Round to nearest integer, halves away from zero; Fraction or float."""
    if isinstance(x, Fraction):
        n, d = x.numerator, x.denominator
        if n >= 0:
            return (2 * n + d) // (2 * d)
        return -((-2 * n + d) // (2 * d))
    if x >= 0:
        return int(math.floor(x + 0.5))
    return -int(math.floor(-x + 0.5))


def shape_radius_fp(box: Box, size_level: int, image_size: int) -> int:
    """Circumradius in 1/256 pixel units."""
    r = Fraction(3 + size_level, 10) * box.half_extent * image_size * FP
    return _round_half_away(r)


def _center_fp(box: Box, image_size: int) -> Tuple[int, int]:
    cx, cy = box.center
    return (
        _round_half_away(cx * image_size * FP),
        _round_half_away(cy * image_size * FP),
    )


def _fill_polygon(img: np.ndarray, verts: Sequence[Tuple[int, int]], value: int) -> None:
    """Even-odd scanline fill; vertices in fixed point, exact intersections."""
    h, w = img.shape
    ys = [v[1] for v in verts]
    py_lo = max(0, -(-(min(ys) - FP // 2) // FP))        # ceil div
    py_hi = min(h - 1, (max(ys) - FP // 2) // FP)        # floor div
    edges = list(zip(verts, verts[1:] + [verts[0]]))
    for py in range(py_lo, py_hi + 1):
        yc = py * FP + FP // 2
        xs: List[Fraction] = []
        for (ax, ay), (bx, by) in edges:
            if ay == by:
                continue
            if ay < by:
                x1, y1, x2, y2 = ax, ay, bx, by
            else:
                x1, y1, x2, y2 = bx, by, ax, ay
            if y1 <= yc < y2:
                xs.append(Fraction(x1 * (y2 - yc) + x2 * (yc - y1), y2 - y1))
        xs.sort()
        for a, b in zip(xs[0::2], xs[1::2]):
            px_lo = max(0, math.ceil((a - Fraction(FP, 2)) / FP))
            px_hi = min(w - 1, math.floor((b - Fraction(FP, 2)) / FP))
            if px_lo <= px_hi:
                img[py, px_lo : px_hi + 1] = value


def _draw_line(img: np.ndarray, x0: int, y0: int, x1: int, y1: int, value: int) -> None:
    """Bresenham line, clipped to the image."""
    h, w = img.shape
    dx, dy = abs(x1 - x0), -abs(y1 - y0)
    sx = 1 if x0 < x1 else -1
    sy = 1 if y0 < y1 else -1
    err = dx + dy
    x, y = x0, y0
    while True:
        if 0 <= x < w and 0 <= y < h:
            img[y, x] = value
        if x == x1 and y == y1:
            return
        e2 = 2 * err
        if e2 >= dy:
            err += dy
            x += sx
        if e2 <= dx:
            err += dx
            y += sy


def _draw_circle_outline(img: np.ndarray, cx: int, cy: int, r: int, value: int) -> None:
    """Midpoint circle."""
    h, w = img.shape

    def put(x, y):
        if 0 <= x < w and 0 <= y < h:
            img[y, x] = value

    x, y = r, 0
    err = 1 - r
    while x >= y:
        for px, py in (
            (cx + x, cy + y), (cx - x, cy + y), (cx + x, cy - y), (cx - x, cy - y),
            (cx + y, cy + x), (cx - y, cy + x), (cx + y, cy - x), (cx - y, cy - x),
        ):
            put(px, py)
        y += 1
        if err < 0:
            err += 2 * y + 1
        else:
            x -= 1
            err += 2 * (y - x) + 1


def _fill_circle(img: np.ndarray, cx: int, cy: int, r: int, value: int) -> None:
    h, w = img.shape
    for dy in range(-r, r + 1):
        py = cy + dy
        if not (0 <= py < h):
            continue
        half = math.isqrt(r * r - dy * dy)
        x_lo = max(0, cx - half)
        x_hi = min(w - 1, cx + half)
        if x_lo <= x_hi:
            img[py, x_lo : x_hi + 1] = value


def _draw_entity(img: np.ndarray, box: Box, shape_type: int, size_level: int,
                 color: int, image_size: int) -> None:
    cx_fp, cy_fp = _center_fp(box, image_size)
    r_fp = shape_radius_fp(box, size_level, image_size)
    value = fill_intensity(color)
    if shape_type == 4:  # circle
        cx, cy = _round_half_away(Fraction(cx_fp, FP)), _round_half_away(Fraction(cy_fp, FP))
        r = _round_half_away(Fraction(r_fp, FP))
        _fill_circle(img, cx, cy, r, value)
        _draw_circle_outline(img, cx, cy, r, 0)
        return
    unit = _POLY[shape_type + 3]
    verts_fp = [
        (cx_fp + _round_half_away(r_fp * ux), cy_fp + _round_half_away(r_fp * uy))
        for ux, uy in unit
    ]
    _fill_polygon(img, verts_fp, value)
    verts_px = [
        (_round_half_away(Fraction(vx, FP)), _round_half_away(Fraction(vy, FP)))
        for vx, vy in verts_fp
    ]
    for (x0, y0), (x1, y1) in zip(verts_px, verts_px[1:] + [verts_px[0]]):
        _draw_line(img, x0, y0, x1, y1, 0)


def render_panel(panel: Panel, config: Config, image_size: int) -> np.ndarray:
    """One panel as a (size, size) uint8 image."""
    if image_size not in SUPPORTED_SIZES:
        raise UnsupportedSize(
            f"image size {image_size} not in {SUPPORTED_SIZES}"
        )
    img = np.full((image_size, image_size), 255, dtype=np.uint8)
    layout = component_layout(config)
    for boxes, entities in zip(layout, panel.components):
        for e in entities:
            _draw_entity(img, boxes[e.slot], e.type, e.size, e.color, image_size)
    return img


def render_puzzle(puzzle: Puzzle, image_size: int) -> np.ndarray:
    """(16, size, size) uint8 stack: 8 context panels then 8 candidates."""
    panels = list(puzzle.context) + list(puzzle.candidates)
    return np.stack(
        [render_panel(p, puzzle.config, image_size) for p in panels], axis=0
    )

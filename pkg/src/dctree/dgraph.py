"""Derivate graph on the Khalimsky grid.

All derivates live in one flat index space: first the ``(width+1) * height``
horizontal derivates row-major (column 0 and column ``width`` are border
sentinels), then the ``width * (height+1)`` vertical derivates row-major
(gap rows 0 and ``height`` are border sentinels).

Horizontal derivate ``(row, col)`` separates pixels ``(col-1, row)`` and
``(col, row)``; vertical derivate ``(row, col)`` separates ``(col, row-1)`` and
``(col, row)``. Pixel coordinates are ``(x, y)``, pixel index ``y*width + x``.
Border sentinels sit at level ``bins`` and are never flooded.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .preprocess import QuantizedDerivates

HORIZONTAL = "horizontal"
VERTICAL = "vertical"


class DerivateId(NamedTuple):
    orientation: str
    row: int
    col: int


class BorderDerivateError(ValueError):
    """Raised when an interior-only operation is given a border sentinel."""


@dataclass(frozen=True, eq=False)
class LeveledGraph:
    """Node-weighted graph consumed by the flooding engine.

    ``neighbors[n]`` lists adjacent node ids (-1 for none); ``pixels[n]`` holds
    the one or two pixels a node covers (-1 for unused). Nodes whose level is
    ``>= bins`` are sentinels.
    """

    levels: np.ndarray
    neighbors: np.ndarray
    pixels: np.ndarray
    pixel_count: int
    bins: int
    width: int
    height: int

    @property
    def node_count(self) -> int:
        return self.levels.size

    def interior_nodes(self) -> np.ndarray:
        return np.flatnonzero(self.levels < self.bins)


@dataclass(frozen=True, eq=False)
class DerivateGrid(LeveledGraph):
    @property
    def sentinel(self) -> int:
        return self.bins

    @property
    def horizontal_count(self) -> int:
        return (self.width + 1) * self.height

    def id_of(self, d: DerivateId) -> int:
        return derivate_index(self.width, self.height, d)

    def derivate(self, index: int) -> DerivateId:
        return derivate_id(self.width, self.height, index)

    def is_border(self, d) -> bool:
        index = d if isinstance(d, (int, np.integer)) else self.id_of(d)
        return bool(self.levels[index] >= self.bins)


def derivate_count(width: int, height: int) -> int:
    return (width + 1) * height + width * (height + 1)


def derivate_index(width: int, height: int, d: DerivateId) -> int:
    orientation, row, col = d
    if orientation == HORIZONTAL:
        if not (0 <= row < height and 0 <= col <= width):
            raise IndexError(f"{d} outside a {width}x{height} grid")
        return row * (width + 1) + col
    if orientation == VERTICAL:
        if not (0 <= row <= height and 0 <= col < width):
            raise IndexError(f"{d} outside a {width}x{height} grid")
        return (width + 1) * height + row * width + col
    raise ValueError(f"unknown orientation {orientation!r}")


def derivate_id(width: int, height: int, index: int) -> DerivateId:
    nh = (width + 1) * height
    if not 0 <= index < derivate_count(width, height):
        raise IndexError(f"derivate index {index} out of range")
    if index < nh:
        row, col = divmod(index, width + 1)
        return DerivateId(HORIZONTAL, row, col)
    row, col = divmod(index - nh, width)
    return DerivateId(VERTICAL, row, col)


@lru_cache(maxsize=8)
def _topology(width: int, height: int):
    """Neighbor and pixel tables of the derivate graph (cached per geometry)."""
    w, h = width, height
    nh = (w + 1) * h
    n = nh + w * (h + 1)
    nbrs = np.full((n, 6), -1, dtype=np.int32)
    pix = np.full((n, 2), -1, dtype=np.int32)
    border = np.ones(n, dtype=bool)

    def hid(r, c):
        return r * (w + 1) + c

    def vid(r, c):
        return nh + r * w + c

    # interior horizontal derivates: rows 0..h-1, cols 1..w-1
    r, c = np.meshgrid(np.arange(h), np.arange(1, w), indexing="ij")
    r, c = r.ravel(), c.ravel()
    ids = hid(r, c)
    border[ids] = False
    pix[ids, 0] = r * w + (c - 1)
    pix[ids, 1] = r * w + c
    nbrs[ids] = np.stack(
        [hid(r, c - 1), vid(r, c - 1), vid(r + 1, c - 1), vid(r, c), vid(r + 1, c), hid(r, c + 1)], axis=1
    )

    # interior vertical derivates: gap rows 1..h-1, cols 0..w-1
    r, c = np.meshgrid(np.arange(1, h), np.arange(w), indexing="ij")
    r, c = r.ravel(), c.ravel()
    ids = vid(r, c)
    border[ids] = False
    pix[ids, 0] = (r - 1) * w + c
    pix[ids, 1] = r * w + c
    nbrs[ids] = np.stack(
        [vid(r - 1, c), hid(r - 1, c), hid(r - 1, c + 1), hid(r, c), hid(r, c + 1), vid(r + 1, c)], axis=1
    )
    for a in (nbrs, pix, border):
        a.setflags(write=False)
    return nbrs, pix, border


def build_grid(q: QuantizedDerivates) -> DerivateGrid:
    """Lay quantized derivates out on the flat derivate index space."""
    w, h, bins = q.width, q.height, q.bins
    nbrs, pix, border = _topology(w, h)
    levels = np.full(derivate_count(w, h), bins, dtype=np.int32)
    nh = (w + 1) * h
    levels[:nh].reshape(h, w + 1)[:, 1:w] = q.horiz
    levels[nh:].reshape(h + 1, w)[1:h, :] = q.vert
    if np.any(levels[~border] >= bins) or np.any(levels < 0):
        raise ValueError("interior derivate levels must lie in [0, bins)")
    levels.setflags(write=False)
    return DerivateGrid(levels, nbrs, pix, w * h, bins, w, h)


def neighbors(grid: DerivateGrid, d: DerivateId) -> list[DerivateId]:
    """The six derivates sharing a pixel with interior derivate ``d``."""
    index = grid.id_of(d)
    if grid.is_border(index):
        raise BorderDerivateError(f"{d} is a border sentinel")
    return [grid.derivate(int(i)) for i in grid.neighbors[index]]


def pixels_of(d: DerivateId, width: int, height: int) -> tuple[tuple[int, int], tuple[int, int]]:
    """The two 4-adjacent pixels ``(x, y)`` an interior derivate separates."""
    orientation, row, col = d
    derivate_index(width, height, d)
    if orientation == HORIZONTAL:
        if col == 0 or col == width:
            raise BorderDerivateError(f"{d} is a border sentinel")
        return (col - 1, row), (col, row)
    if row == 0 or row == height:
        raise BorderDerivateError(f"{d} is a border sentinel")
    return (col, row - 1), (col, row)


def pixel_grid(levels: np.ndarray, bins: int) -> LeveledGraph:
    """4-connected pixel graph with one node per pixel (gray-value trees)."""
    levels = np.asarray(levels)
    h, w = levels.shape
    idx = np.arange(h * w, dtype=np.int32).reshape(h, w)
    nbrs = np.full((h, w, 4), -1, dtype=np.int32)
    nbrs[1:, :, 0] = idx[:-1, :]
    nbrs[:, :-1, 1] = idx[:, 1:]
    nbrs[:-1, :, 2] = idx[1:, :]
    nbrs[:, 1:, 3] = idx[:, :-1]
    pix = np.full((h * w, 2), -1, dtype=np.int32)
    pix[:, 0] = idx.ravel()
    lv = np.ascontiguousarray(levels.ravel(), dtype=np.int32)
    if lv.size and (lv.min() < 0 or lv.max() >= bins):
        raise ValueError("pixel levels must lie in [0, bins)")
    return LeveledGraph(lv, nbrs.reshape(h * w, 4), pix, h * w, bins, w, h)

"""Component trees built by local flooding immersion.

The same engine builds the derivate-based tree (nodes are derivates, each
covering two pixels) and the classical gray-value tree used by the MSER
baseline (nodes are pixels). Trees are always returned in canonical form:
no node shares its pixel set with its only child, and node ids are ordered by
descending level, then by the smallest pixel index they contain, so the root
is node 0.
"""
from __future__ import annotations

import io
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import _flood
from .dgraph import LeveledGraph


class TreeError(ValueError):
    """Raised for invalid tree inputs or malformed tree files."""


@dataclass(frozen=True)
class TreeBuildParams:
    bins: int = 256
    min_area: int = 1
    start_node: int | None = None

    def __post_init__(self):
        if self.bins < 2:
            raise ValueError("bins must be >= 2")
        if self.min_area < 1:
            raise ValueError("min_area must be >= 1")


@dataclass(frozen=True)
class ComponentNode:
    id: int
    parent: int | None
    level: int
    area: int
    first_pixel: int
    children: tuple[int, ...]


@dataclass(frozen=True, eq=False)
class ComponentTree:
    """Canonical component tree over a ``width x height`` pixel grid.

    Node attributes are parallel arrays indexed by node id. ``pixel_to_node``
    maps each pixel index to the smallest node containing it; it may be
    ``None`` for trees parsed from text without a pixel section.
    """

    width: int
    height: int
    parent: np.ndarray
    level: np.ndarray
    area: np.ndarray
    first_pixel: np.ndarray
    pixel_to_node: np.ndarray | None

    root = 0

    @property
    def node_count(self) -> int:
        return self.parent.size

    @property
    def pixel_count(self) -> int:
        return self.width * self.height

    def node(self, i: int) -> ComponentNode:
        self._check(i)
        p = int(self.parent[i])
        kids = self._children_index
        return ComponentNode(
            i,
            None if p < 0 else p,
            int(self.level[i]),
            int(self.area[i]),
            int(self.first_pixel[i]),
            tuple(int(c) for c in kids[1][kids[0][i] : kids[0][i + 1]]),
        )

    @property
    def nodes(self) -> list[ComponentNode]:
        return [self.node(i) for i in range(self.node_count)]

    def children(self, i: int) -> np.ndarray:
        self._check(i)
        offsets, kids = self._children_index
        return kids[offsets[i] : offsets[i + 1]]

    @cached_property
    def _children_index(self):
        m = self.node_count
        order = np.argsort(self.parent, kind="stable")
        order = order[self.parent[order] >= 0]
        counts = np.bincount(self.parent[order], minlength=m)
        offsets = np.zeros(m + 1, dtype=np.int64)
        np.cumsum(counts, out=offsets[1:])
        return offsets, order

    @cached_property
    def _layout(self):
        if self.pixel_to_node is None:
            raise TreeError("tree has no pixel map")
        return _flood.region_layout(self.parent, self.area, self.pixel_to_node)

    def _check(self, i):
        if not 0 <= i < self.node_count:
            raise IndexError(f"node id {i} out of range [0, {self.node_count})")

    def __eq__(self, other):
        if not isinstance(other, ComponentTree):
            return NotImplemented
        same_map = (self.pixel_to_node is None) == (other.pixel_to_node is None) and (
            self.pixel_to_node is None or np.array_equal(self.pixel_to_node, other.pixel_to_node)
        )
        return (
            (self.width, self.height) == (other.width, other.height)
            and all(
                np.array_equal(getattr(self, a), getattr(other, a))
                for a in ("parent", "level", "area", "first_pixel")
            )
            and same_map
        )

    def __repr__(self):
        return f"ComponentTree({self.width}x{self.height}, {self.node_count} nodes)"


# ---------------------------------------------------------------------------
# construction


def _default_start(graph: LeveledGraph) -> int:
    interior = graph.interior_nodes()
    if interior.size == 0:
        raise TreeError("graph has no interior nodes")
    return int(interior[0])


def build_tree(
    graph: LeveledGraph,
    params: TreeBuildParams | None = None,
    *,
    stats: dict | None = None,
    verify: bool = False,
) -> ComponentTree:
    """Build the canonical component tree of ``graph`` in one flooding pass.

    ``stats``, if given, receives ``merges``: how many times each graph node
    was merged into a component (1 for every interior node). ``verify`` adds
    a union-find check that every merged pixel belongs to the growing
    component.
    """
    if params is None:
        params = TreeBuildParams(bins=graph.bins)
    if graph.pixel_count < 1:
        raise TreeError("empty graph")
    if params.bins != graph.bins:
        raise TreeError(f"params.bins={params.bins} but graph has {graph.bins} bins")
    interior = graph.interior_nodes()
    if interior.size == 0:
        if graph.pixel_count != 1:
            raise TreeError("graph without interior nodes must cover exactly one pixel")
        one = np.zeros(1, dtype=np.int64)
        return ComponentTree(graph.width, graph.height, np.array([-1]), one, one + 1, one, one)

    start = _default_start(graph) if params.start_node is None else int(params.start_node)
    if not 0 <= start < graph.node_count or graph.levels[start] >= graph.bins:
        raise TreeError(f"start node {start} is not an interior node")
    parent, level, area, p2n, merges, status = _flood.flood(
        graph.levels, graph.neighbors, graph.pixels, graph.pixel_count, graph.bins, params.min_area, start, verify
    )
    if status != 0:
        raise TreeError("flooding found a pixel in a foreign component")
    if np.count_nonzero(merges) != interior.size or (p2n < 0).any():
        raise TreeError("graph is not connected")
    if stats is not None:
        stats["merges"] = merges
    # the engine never emits a node equal to its only child and emits
    # children first, so only the renumbering is left to do
    min_pixel = _flood.min_pixels(parent, p2n)
    return _renumber(graph.width, graph.height, np.arange(parent.size), parent, level, area, min_pixel, p2n)


def _finish(width, height, parent, level, area, p2n) -> ComponentTree:
    keep, new_parent, rep, min_pixel = _flood.canonical_form(
        np.asarray(parent, dtype=np.int64),
        np.asarray(level, dtype=np.int64),
        np.asarray(area, dtype=np.int64),
        np.asarray(p2n, dtype=np.int64),
    )
    return _renumber(width, height, np.flatnonzero(keep), new_parent, level, area, min_pixel, rep[p2n])


def _renumber(width, height, kept, parent, level, area, min_pixel, p2n) -> ComponentTree:
    level = np.asarray(level, dtype=np.int64)
    key = (level.max() - level[kept]) * (width * height) + min_pixel[kept]
    order = kept[np.argsort(key)]
    new_id = np.full(len(parent), -1, dtype=np.int64)
    new_id[order] = np.arange(order.size)
    par = parent[order]
    par = np.where(par >= 0, new_id[np.maximum(par, 0)], -1)
    if np.count_nonzero(par < 0) != 1:
        raise TreeError("tree must have exactly one root")
    return ComponentTree(
        width,
        height,
        par.astype(np.int64),
        np.asarray(level, dtype=np.int64)[order],
        np.asarray(area, dtype=np.int64)[order],
        min_pixel[order].astype(np.int64),
        new_id[p2n],
    )


def canonicalize(tree: ComponentTree) -> ComponentTree:
    """Merge nodes equal to their only child and renumber deterministically."""
    if tree.pixel_to_node is None:
        raise TreeError("canonicalize needs the pixel map")
    return _finish(tree.width, tree.height, tree.parent, tree.level, tree.area, tree.pixel_to_node)


def node_region(tree: ComponentTree, node: int) -> np.ndarray:
    """Sorted pixel indices of ``node``'s component."""
    tree._check(node)
    start, order = tree._layout
    return np.sort(order[start[node] : start[node] + tree.area[node]])


# ---------------------------------------------------------------------------
# text format


def serialize_tree(tree: ComponentTree, with_pixels: bool = False) -> str:
    """One ``id parent level area first_pixel`` line per node, root first.

    With ``with_pixels`` a ``CTT1`` header and a pixel section are added; this
    is the ``.ctt`` file format.
    """
    out = io.StringIO()
    if with_pixels:
        out.write(f"CTT1 {tree.width} {tree.height} {tree.node_count}\n")
    table = np.stack(
        [np.arange(tree.node_count), tree.parent, tree.level, tree.area, tree.first_pixel], axis=1
    )
    np.savetxt(out, table, fmt="%d")
    if with_pixels:
        if tree.pixel_to_node is None:
            raise TreeError("tree has no pixel map")
        out.write("pixels\n")
        np.savetxt(out, tree.pixel_to_node.reshape(tree.height, tree.width), fmt="%d")
    return out.getvalue()


def parse_tree(text: str, width: int | None = None, height: int | None = None) -> ComponentTree:
    """Inverse of :func:`serialize_tree` (either form)."""
    lines = text.splitlines()
    p2n = None
    if lines and lines[0].startswith("CTT1"):
        try:
            _, w, h, m = lines[0].split()
            width, height, m = int(w), int(h), int(m)
        except ValueError as exc:
            raise TreeError("malformed CTT1 header") from exc
        if len(lines) != 2 + m + height or lines[1 + m] != "pixels":
            raise TreeError("malformed .ctt file")
        node_lines = lines[1 : 1 + m]
        p2n = _int_table(lines[2 + m :], width).ravel()
    else:
        node_lines = lines
    table = _int_table(node_lines, 5)
    if table.shape[0] == 0:
        raise TreeError("tree has no nodes")
    if not np.array_equal(table[:, 0], np.arange(table.shape[0])):
        raise TreeError("node ids must be 0..n-1 in order")
    if width is None or height is None:
        width, height = int(table[0, 3]), 1
    cols = [np.ascontiguousarray(table[:, k]) for k in range(1, 5)]
    return ComponentTree(width, height, *cols, p2n)


def _int_table(lines, ncol):
    try:
        rows = [[int(v) for v in line.split()] for line in lines]
    except ValueError as exc:
        raise TreeError("non-integer field in tree text") from exc
    if any(len(r) != ncol for r in rows):
        raise TreeError(f"expected {ncol} fields per line")
    return np.array(rows, dtype=np.int64).reshape(len(rows), ncol)


def save_tree(tree: ComponentTree, path) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(serialize_tree(tree, with_pixels=True))


def load_tree(path) -> ComponentTree:
    with open(path) as fh:
        return parse_tree(fh.read())

"""Brute-force component trees by global thresholding.

For every level the pixel partition is recomputed from scratch with a fresh
union-find, and tree nodes are read off the sequence of partitions. Slow by
design and independent of the flooding engine and of :mod:`dctree.dgraph`.
"""
from __future__ import annotations

import numpy as np

from .ctree import ComponentTree, canonicalize
from .preprocess import QuantizedDerivates


class _UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, a):
        while self.parent[a] != a:
            self.parent[a] = self.parent[self.parent[a]]
            a = self.parent[a]
        return a

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def derivate_edges(q: QuantizedDerivates):
    """``(level, p, q)`` for every interior derivate, pixels as flat indices."""
    w = q.width
    edges = []
    for y in range(q.height):
        for x in range(w - 1):
            edges.append((int(q.horiz[y, x]), y * w + x, y * w + x + 1))
    for y in range(q.height - 1):
        for x in range(w):
            edges.append((int(q.vert[y, x]), y * w + x, (y + 1) * w + x))
    return edges


def threshold_decomposition(n_pixels: int, edges, bins: int):
    """Per level ``t``, the connected pixel sets using edges of level ``<= t``.

    Returns a list of ``bins`` lists of frozensets. Pixels touched by no edge
    at level ``t`` are singletons and are included.
    """
    levels = []
    for t in range(bins):
        uf = _UnionFind(n_pixels)
        for lv, a, b in edges:
            if lv <= t:
                uf.union(a, b)
        groups = {}
        for p in range(n_pixels):
            groups.setdefault(uf.find(p), set()).add(p)
        levels.append([frozenset(g) for g in groups.values()])
    return levels


def _tree_from_partitions(width, height, partitions, member, min_area) -> ComponentTree:
    """Nodes are components that first appear at a level; parents link upward.

    ``member(t, comp)`` says whether a component at level ``t`` counts as a
    tree node (derivate trees exclude untouched singletons).
    """
    n_pixels = width * height
    created = {}
    for t, comps in enumerate(partitions):
        for comp in comps:
            if comp not in created and member(t, comp):
                created[comp] = t
    full = frozenset(range(n_pixels))
    if full not in created:
        created[full] = 0
    nodes = [s for s in created if len(s) >= min_area or s == full]
    nodes.sort(key=lambda s: (len(s), created[s], min(s)))
    index = {s: i for i, s in enumerate(nodes)}
    parent = np.full(len(nodes), -1, dtype=np.int64)
    for s in nodes:
        if s == full:
            continue
        # smallest strictly larger node containing s (areas sorted ascending)
        for cand in nodes[index[s] + 1 :]:
            if len(cand) > len(s) and s <= cand:
                parent[index[s]] = index[cand]
                break
    p2n = np.full(n_pixels, -1, dtype=np.int64)
    for s in nodes:  # ascending area: first hit is the smallest
        for p in s:
            if p2n[p] < 0:
                p2n[p] = index[s]
    tree = ComponentTree(
        width,
        height,
        parent,
        np.array([created[s] for s in nodes], dtype=np.int64),
        np.array([len(s) for s in nodes], dtype=np.int64),
        np.array([min(s) for s in nodes], dtype=np.int64),
        p2n,
    )
    return canonicalize(tree)


def oracle_tree(q: QuantizedDerivates, min_area: int = 1) -> ComponentTree:
    """Derivate-based component tree by thresholding every bin level."""
    n_pixels = q.width * q.height
    edges = derivate_edges(q)
    partitions = threshold_decomposition(n_pixels, edges, q.bins)

    def member(t, comp):
        # pixels no derivate has reached yet are not components
        return len(comp) > 1

    return _tree_from_partitions(q.width, q.height, partitions, member, min_area)


def oracle_gray_tree(levels: np.ndarray, bins: int, min_area: int = 1) -> ComponentTree:
    """Classical min-tree of a gray level image with 4-connectivity."""
    levels = np.asarray(levels)
    h, w = levels.shape
    partitions = []
    for t in range(bins):
        uf = _UnionFind(h * w)
        for y in range(h):
            for x in range(w):
                if levels[y, x] > t:
                    continue
                if x + 1 < w and levels[y, x + 1] <= t:
                    uf.union(y * w + x, y * w + x + 1)
                if y + 1 < h and levels[y + 1, x] <= t:
                    uf.union(y * w + x, (y + 1) * w + x)
        groups = {}
        for p in range(h * w):
            if levels.flat[p] <= t:
                groups.setdefault(uf.find(p), set()).add(p)
        partitions.append([frozenset(g) for g in groups.values()])
    return _tree_from_partitions(w, h, partitions, lambda t, comp: True, min_area)

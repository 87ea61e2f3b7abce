import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import raw_quantized
from dctree.dgraph import (
    HORIZONTAL,
    VERTICAL,
    BorderDerivateError,
    DerivateId,
    build_grid,
    derivate_count,
    derivate_id,
    derivate_index,
    neighbors,
    pixel_grid,
    pixels_of,
)


def _grid(w, h, bins=8, seed=0):
    return build_grid(raw_quantized(np.random.default_rng(seed), w, h, bins))


@pytest.mark.parametrize("w,h,total,interior", [(6, 6, 84, 60), (1, 1, 4, 0), (2, 1, 7, 1), (3, 2, 17, 7)])
def test_counts(w, h, total, interior):
    g = _grid(w, h)
    assert derivate_count(w, h) == total == g.node_count
    assert g.interior_nodes().size == interior
    assert np.count_nonzero(g.levels == g.sentinel) == total - interior


def test_border_levels_and_interior_copy():
    g = _grid(5, 4, bins=8, seed=3)
    for i in range(g.node_count):
        d = g.derivate(i)
        border = (d.orientation == HORIZONTAL and d.col in (0, 5)) or (d.orientation == VERTICAL and d.row in (0, 4))
        assert g.is_border(i) == border
        assert (g.levels[i] == 8) == border


def test_index_roundtrip():
    w, h = 4, 3
    for i in range(derivate_count(w, h)):
        assert derivate_index(w, h, derivate_id(w, h, i)) == i
    with pytest.raises(IndexError):
        derivate_id(w, h, derivate_count(w, h))
    with pytest.raises(IndexError):
        derivate_index(w, h, DerivateId(HORIZONTAL, 0, 5))
    with pytest.raises(ValueError):
        derivate_index(w, h, DerivateId("diagonal", 0, 0))


def test_3x3_six_neighbors():
    g = _grid(3, 3)
    for i in g.interior_nodes():
        nb = neighbors(g, g.derivate(int(i)))
        assert len(nb) == 6
        for d in nb:
            derivate_index(3, 3, d)


def test_top_left_vertical_has_border_above():
    g = _grid(3, 3)
    nb = neighbors(g, DerivateId(VERTICAL, 1, 0))
    assert nb[0] == DerivateId(VERTICAL, 0, 0)
    assert g.is_border(nb[0])


def test_neighbors_rejects_border():
    g = _grid(3, 3)
    with pytest.raises(BorderDerivateError):
        neighbors(g, DerivateId(HORIZONTAL, 0, 0))


def test_pixels_of_examples():
    assert pixels_of(DerivateId(HORIZONTAL, 0, 1), 2, 1) == ((0, 0), (1, 0))
    assert pixels_of(DerivateId(VERTICAL, 2, 1), 3, 3) == ((1, 1), (1, 2))
    with pytest.raises(BorderDerivateError):
        pixels_of(DerivateId(VERTICAL, 0, 1), 3, 3)
    with pytest.raises(BorderDerivateError):
        pixels_of(DerivateId(HORIZONTAL, 1, 3), 3, 3)


def _cover(d, w, h):
    """Pixels a derivate touches, including virtual ones outside the image."""
    o, r, c = d
    return {(c - 1, r), (c, r)} if o == HORIZONTAL else {(c, r - 1), (c, r)}


dims = st.tuples(st.integers(1, 12), st.integers(1, 12))


@given(dims)
def test_degree_and_symmetry(wh):
    w, h = wh
    g = _grid(w, h)
    for i in g.interior_nodes():
        row = g.neighbors[i]
        assert row.size == 6 and (row >= 0).all() and len(set(row.tolist())) == 6
        for j in row:
            if not g.is_border(int(j)):
                assert i in g.neighbors[j]


@given(dims)
def test_neighbors_iff_share_a_pixel(wh):
    # grid steps: derivates that share a pixel lie within one row and column
    w, h = wh
    g = _grid(w, h)
    ids = [g.derivate(i) for i in range(g.node_count)]
    for i in g.interior_nodes():
        expected = {
            j
            for j, e in enumerate(ids)
            if j != i and _cover(ids[i], w, h) & _cover(e, w, h)
        }
        assert set(g.neighbors[i].tolist()) == expected


@given(dims)
def test_pixel_coverage_and_adjacent_pairs(wh):
    w, h = wh
    g = _grid(w, h)
    seen = {}
    for i in g.interior_nodes():
        d = g.derivate(int(i))
        a, b = pixels_of(d, w, h)
        assert abs(a[0] - b[0]) + abs(a[1] - b[1]) == 1
        ia, ib = a[1] * w + a[0], b[1] * w + b[0]
        assert sorted(g.pixels[i].tolist()) == sorted([ia, ib])
        key = frozenset((a, b))
        assert key not in seen
        seen[key] = d
    pairs = {frozenset(((x, y), (x + 1, y))) for y in range(h) for x in range(w - 1)}
    pairs |= {frozenset(((x, y), (x, y + 1))) for y in range(h - 1) for x in range(w)}
    assert set(seen) == pairs
    if w * h > 1:
        covered = {p for k in seen for p in k}
        assert covered == {(x, y) for x in range(w) for y in range(h)}


@given(dims)
def test_interior_graph_connected(wh):
    w, h = wh
    g = _grid(w, h)
    interior = g.interior_nodes()
    if interior.size == 0:
        assert w * h == 1
        return
    seen = {int(interior[0])}
    stack = [int(interior[0])]
    while stack:
        i = stack.pop()
        for j in g.neighbors[i]:
            j = int(j)
            if not g.is_border(j) and j not in seen:
                seen.add(j)
                stack.append(j)
    assert len(seen) == interior.size


def test_build_grid_rejects_out_of_range_levels():
    q = raw_quantized(np.random.default_rng(0), 3, 3, 4)
    q.horiz[0, 0] = 4
    with pytest.raises(ValueError):
        build_grid(q)


def test_pixel_grid():
    g = pixel_grid(np.array([[0, 1, 2], [3, 4, 5]]), 6)
    assert g.node_count == 6 and g.pixel_count == 6
    assert sorted(x for x in g.neighbors[4].tolist() if x >= 0) == [1, 3, 5]
    with pytest.raises(ValueError):
        pixel_grid(np.array([[6]]), 6)

import dataclasses

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import assert_tree_invariants, random_quantized, raw_quantized
from dctree.ctree import (
    ComponentTree,
    TreeBuildParams,
    TreeError,
    build_tree,
    canonicalize,
    load_tree,
    node_region,
    parse_tree,
    save_tree,
    serialize_tree,
)
from dctree.dgraph import build_grid
from dctree.fixtures import toy_image
from dctree.mcimage import MultiChannelImage
from dctree.pipeline import TreeConfig, derivate_tree, preprocess
from dctree.preprocess import SmoothingParams

RAW = TreeConfig(smoothing=SmoothingParams("none"))


def test_constant_image_single_root():
    tree = derivate_tree(MultiChannelImage(np.full((4, 4), 7, np.uint8)), RAW)
    assert tree.node_count == 1
    root = tree.node(0)
    assert (root.parent, root.level, root.area, root.first_pixel, root.children) == (None, 0, 16, 0, ())
    assert serialize_tree(tree) == "0 -1 0 16 0\n"


def test_one_pixel_image():
    tree = derivate_tree(MultiChannelImage(np.zeros((1, 1), np.uint8)), RAW)
    assert serialize_tree(tree) == "0 -1 0 1 0\n"
    assert tree.pixel_to_node.tolist() == [0]


def _lca(tree, a, b):
    up = set()
    while a >= 0:
        up.add(a)
        a = tree.parent[a]
    while b not in up:
        b = tree.parent[b]
    return b


def test_toy_layout_merge_order():
    image, masks = toy_image()
    tree = derivate_tree(image, RAW)
    assert_tree_invariants(tree)
    leaf = {c: int(tree.pixel_to_node[np.flatnonzero(m.ravel())[0]]) for c, m in masks.items()}
    # every color patch is exactly one leaf
    for c, m in masks.items():
        assert set(node_region(tree, leaf[c]).tolist()) == set(np.flatnonzero(m.ravel()).tolist())
    level = tree.level
    pink_red = _lca(tree, leaf["pink"], leaf["red"])
    greens = _lca(tree, leaf["lightgreen"], leaf["green"])
    orange = _lca(tree, leaf["orange"], pink_red)
    assert orange == _lca(tree, leaf["orange"], greens)
    gray = _lca(tree, leaf["gray"], orange)
    assert level[pink_red] < level[greens] < level[orange] < level[gray]
    assert gray == 0 and tree.node_count == 10


def test_params_validation():
    with pytest.raises(ValueError):
        TreeBuildParams(bins=1)
    with pytest.raises(ValueError):
        TreeBuildParams(min_area=0)


def test_bad_start_and_bins(rng):
    grid = build_grid(raw_quantized(rng, 3, 3, 8))
    with pytest.raises(TreeError):
        build_tree(grid, TreeBuildParams(bins=8, start_node=0))  # border sentinel
    with pytest.raises(TreeError):
        build_tree(grid, TreeBuildParams(bins=16))


def test_disconnected_graph_rejected():
    from dctree.dgraph import LeveledGraph

    g = LeveledGraph(
        np.array([0, 0], np.int32),
        np.full((2, 1), -1, np.int32),
        np.array([[0, 1], [2, 3]], np.int32),
        4,
        4,
        4,
        1,
    )
    with pytest.raises(TreeError):
        build_tree(g)


def test_single_pass_merge_counter(rng):
    for _ in range(20):
        q = random_quantized(rng, 9, 7, 3, 16)
        grid = build_grid(q)
        stats = {}
        build_tree(grid, TreeBuildParams(bins=16), stats=stats, verify=True)
        merges = stats["merges"]
        interior = grid.levels < grid.bins
        assert (merges[interior] == 1).all()
        assert (merges[~interior] == 0).all()


def test_canonicalize_merges_equal_chain():
    # 2 pixels, three nodes with the same pixel set at levels 4, 3, 2
    tree = ComponentTree(
        2,
        1,
        np.array([-1, 0, 1]),
        np.array([4, 3, 2]),
        np.array([2, 2, 2]),
        np.array([0, 0, 0]),
        np.array([2, 2]),
    )
    c = canonicalize(tree)
    assert serialize_tree(c) == "0 -1 2 2 0\n"
    assert c.pixel_to_node.tolist() == [0, 0]


def test_canonicalize_orders_by_level_then_pixel():
    # root over two leaves given in the "wrong" id order
    tree = ComponentTree(
        4,
        1,
        np.array([2, 2, -1]),
        np.array([1, 1, 5]),
        np.array([2, 2, 4]),
        np.array([2, 0, 0]),
        np.array([1, 1, 0, 0]),
    )
    c = canonicalize(tree)
    assert serialize_tree(c) == "0 -1 5 4 0\n1 0 1 2 0\n2 0 1 2 2\n"
    assert c.pixel_to_node.tolist() == [1, 1, 2, 2]


def test_node_region_errors(rng):
    tree = build_tree(build_grid(raw_quantized(rng, 3, 3, 4)))
    with pytest.raises(IndexError):
        node_region(tree, tree.node_count)
    with pytest.raises(IndexError):
        tree.node(-1)
    assert node_region(tree, 0).tolist() == list(range(9))


def test_parse_errors():
    for text in ["", "0 -1 0\n", "1 -1 0 4 0\n", "0 -1 x 4 0\n", "CTT1 2 1 1\n0 -1 0 2 0\n", "CTT1 2\n"]:
        with pytest.raises(TreeError):
            parse_tree(text)


def test_ctt_file_roundtrip(tmp_path, rng):
    tree = build_tree(build_grid(raw_quantized(rng, 5, 4, 8)))
    save_tree(tree, tmp_path / "t.ctt")
    raw = (tmp_path / "t.ctt").read_bytes()
    back = load_tree(tmp_path / "t.ctt")
    assert back == tree
    save_tree(back, tmp_path / "u.ctt")
    assert (tmp_path / "u.ctt").read_bytes() == raw
    assert raw.startswith(b"CTT1 5 4 ")


quantized = st.builds(
    lambda w, h, bins, seed: raw_quantized(np.random.default_rng(seed), w, h, bins),
    st.integers(1, 10),
    st.integers(1, 10),
    st.sampled_from([2, 4, 8, 16]),
    st.integers(0, 2**32 - 1),
)


@given(quantized, st.sampled_from([1, 1, 2, 5]))
def test_structural_invariants(q, min_area):
    tree = build_tree(build_grid(q), TreeBuildParams(bins=q.bins, min_area=min_area), verify=True)
    assert_tree_invariants(tree)
    if min_area > 1:
        assert (tree.area[1:] >= min_area).all()


@given(quantized, st.sampled_from([2, 3, 6]))
def test_min_area_refines(q, k):
    grid = build_grid(q)
    full = build_tree(grid, TreeBuildParams(bins=q.bins))
    coarse = build_tree(grid, TreeBuildParams(bins=q.bins, min_area=k))
    full_sets = {frozenset(node_region(full, i).tolist()): i for i in range(full.node_count)}
    for i in range(coarse.node_count):
        region = frozenset(node_region(coarse, i).tolist())
        assert region in full_sets
        if i > 0:
            assert coarse.level[i] == full.level[full_sets[region]]


@given(quantized)
def test_canonicalize_idempotent(q):
    tree = build_tree(build_grid(q))
    once = canonicalize(tree)
    assert once == tree
    assert canonicalize(once) == once


@given(quantized)
def test_serialize_roundtrip(q):
    tree = build_tree(build_grid(q))
    text = serialize_tree(tree)
    assert serialize_tree(parse_tree(text)) == text
    full = serialize_tree(tree, with_pixels=True)
    assert parse_tree(full) == tree


@given(quantized, quantized)
def test_equal_iff_same_serialization(a, b):
    ta, tb = build_tree(build_grid(a)), build_tree(build_grid(b))
    same_text = serialize_tree(ta, True) == serialize_tree(tb, True)
    assert (ta == tb) == same_text
    assert ta == parse_tree(serialize_tree(ta, True))


def _shuffled(grid, rng):
    nb = np.array([row[rng.permutation(row.size)] for row in grid.neighbors], dtype=np.int32)
    return dataclasses.replace(grid, neighbors=nb)


@given(quantized, st.integers(0, 2**32 - 1))
def test_start_and_order_invariance(q, seed):
    rng = np.random.default_rng(seed)
    grid = build_grid(q)
    interior = grid.interior_nodes()
    ref = serialize_tree(build_tree(grid), True)
    for start in rng.choice(interior, size=min(3, interior.size), replace=False) if interior.size else []:
        tree = build_tree(_shuffled(grid, rng), TreeBuildParams(bins=q.bins, start_node=int(start)), verify=True)
        assert serialize_tree(tree, True) == ref


def test_gray_tree_on_pixel_grid():
    from dctree.pipeline import gray_tree

    img = MultiChannelImage(np.array([[0, 9, 0], [9, 9, 9], [0, 9, 5]], np.uint8))
    dark = gray_tree(img, "dark")
    assert_tree_invariants(dark)
    # three isolated minima at 0 plus the 5, merged at 9
    leaves = [i for i in range(dark.node_count) if not dark.children(i).size]
    assert sorted(int(dark.level[i]) for i in leaves) == [0, 0, 0, 5]
    assert dark.level[0] == 9 and dark.area[0] == 9


def test_preprocess_is_deterministic(rng):
    img = MultiChannelImage(rng.integers(0, 256, (6, 7, 3)).astype(np.uint8))
    a = serialize_tree(derivate_tree(img), True)
    b = serialize_tree(derivate_tree(img), True)
    assert a == b
    assert preprocess(img).bins == 256

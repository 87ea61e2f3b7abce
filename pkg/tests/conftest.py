import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from dctree.ctree import node_region
from dctree.mcimage import MultiChannelImage
from dctree.preprocess import QuantizedDerivates, compute_derivates, quantize

settings.register_profile(
    "default", max_examples=200, deadline=None, suppress_health_check=[HealthCheck.too_slow], derandomize=True
)
settings.load_profile("default")


def random_image(rng, width, height, channels, levels=256, dtype=np.uint8):
    """Random image with few distinct values so ties are common."""
    data = rng.integers(0, levels, (height, width, channels)) * (255 // max(levels - 1, 1))
    return MultiChannelImage(data.astype(dtype))


def random_quantized(rng, width, height, channels=3, bins=8, levels=4):
    img = random_image(rng, width, height, channels, levels)
    return quantize(compute_derivates(img), bins)


def raw_quantized(rng, width, height, bins):
    """Quantized derivates with uniformly random bin indices."""
    return QuantizedDerivates(
        width,
        height,
        rng.integers(0, bins, (height, width - 1)).astype(np.int32),
        rng.integers(0, bins, (height - 1, width)).astype(np.int32),
        bins,
        1.0,
    )


def assert_tree_invariants(tree):
    """Structural invariants every canonical tree must satisfy."""
    m = tree.node_count
    parent, level, area = tree.parent, tree.level, tree.area
    assert np.count_nonzero(parent < 0) == 1
    assert parent[0] == -1
    assert area[0] == tree.pixel_count
    assert (area > 0).all()
    # parents have smaller ids, hence no cycles
    assert (parent[1:] < np.arange(1, m)).all()
    kids = parent[1:]
    assert (level[1:] < level[kids]).all()
    assert (area[1:] < area[kids]).all()
    child_sum = np.bincount(kids, weights=area[1:], minlength=m)
    assert (child_sum <= area).all()
    # no node equals its only child
    n_kids = np.bincount(kids, minlength=m)
    only = [c for c in range(1, m) if n_kids[parent[c]] == 1]
    assert all(area[c] < area[parent[c]] for c in only)
    if tree.pixel_to_node is not None:
        regions = [set(node_region(tree, i).tolist()) for i in range(m)]
        for i in range(m):
            assert len(regions[i]) == area[i]
            assert min(regions[i]) == tree.first_pixel[i]
            if parent[i] >= 0:
                assert regions[i] < regions[parent[i]]
        for p in range(m):
            sib = [c for c in range(1, m) if parent[c] == p]
            for a in range(len(sib)):
                for b in range(a + 1, len(sib)):
                    assert not regions[sib[a]] & regions[sib[b]]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)

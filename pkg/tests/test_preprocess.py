import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from dctree.mcimage import MultiChannelImage
from dctree.preprocess import (
    DerivateField,
    SmoothingParams,
    compute_derivates,
    quantize,
    smooth,
    theoretical_max,
)


@pytest.mark.parametrize(
    "params",
    [
        SmoothingParams("guided", 2),
        SmoothingParams("guided", 3, regularization_eps=1.0),
        SmoothingParams("bilateral", 2, 5.0),
        SmoothingParams("bilateral", 1, 50.0),
        SmoothingParams("guided", 0),
    ],
)
@pytest.mark.parametrize("value", [0, 77, 255])
def test_constant_image_is_fixed(params, value):
    img = MultiChannelImage(np.full((9, 11, 3), value, np.uint8))
    out = smooth(img, params)
    assert out.depth == "f32"
    assert out.shape == img.shape
    assert (out.data == value).all()


def test_none_returns_input(rng):
    img = MultiChannelImage(rng.integers(0, 256, (6, 5, 2)).astype(np.uint8))
    out = smooth(img, SmoothingParams("none"))
    assert out is img


def test_params_validation():
    with pytest.raises(ValueError):
        SmoothingParams("gaussian")
    with pytest.raises(ValueError):
        SmoothingParams("guided", -1)
    with pytest.raises(ValueError):
        SmoothingParams("bilateral", 2, 0.0)
    with pytest.raises(ValueError):
        SmoothingParams("guided", 2, regularization_eps=0.0)


def _noisy_step(rng, noise=True):
    x = np.zeros((40, 40))
    x[:, 20:] = 100.0
    if noise:
        x = x + rng.normal(0.0, 2.0, x.shape)
    return MultiChannelImage(x.astype(np.float32))


def test_bilateral_keeps_edge_and_removes_noise(rng):
    noisy = _noisy_step(rng)
    out = smooth(noisy, SmoothingParams("bilateral", 3, 10.0)).data[:, :, 0].astype(np.float64)
    # edge magnitude: mean jump across the step column
    jump = (out[:, 20] - out[:, 19]).mean()
    assert abs(jump - 100.0) <= 1.0
    before = noisy.data[:, :, 0].astype(np.float64)
    flat = (slice(5, 35), slice(3, 15))
    assert out[flat].std() <= 0.5 * before[flat].std()
    flat = (slice(5, 35), slice(25, 37))
    assert out[flat].std() <= 0.5 * before[flat].std()


def test_guided_smooths_flat_noise(rng):
    noisy = _noisy_step(rng)
    out = smooth(noisy, SmoothingParams("guided", 2)).data[:, :, 0].astype(np.float64)
    flat = (slice(5, 35), slice(3, 15))
    assert out[flat].std() < noisy.data[:, :, 0][flat].std()
    assert (out[:, 20] - out[:, 19]).mean() > 90.0


def test_l2_pair():
    img = MultiChannelImage(np.array([[[0, 0, 0], [3, 4, 0]]], np.uint8))
    f = compute_derivates(img, "L2")
    assert f.horiz.tolist() == [[5.0]]
    assert f.vert.shape == (0, 2)


def test_constant_derivates_zero():
    f = compute_derivates(MultiChannelImage(np.full((4, 5, 2), 9, np.uint8)))
    assert not f.horiz.any() and not f.vert.any()


def _pair_oracle(data, norm):
    h, w, _ = data.shape
    d = data.astype(np.float64)

    def mag(a, b):
        diff = [abs(a[k] - b[k]) for k in range(len(a))]
        if norm == "L1":
            return sum(diff)
        if norm == "Linf":
            return max(diff)
        return sum(v * v for v in diff) ** 0.5

    horiz = [[mag(d[y, x], d[y, x + 1]) for x in range(w - 1)] for y in range(h)]
    vert = [[mag(d[y, x], d[y + 1, x]) for x in range(w)] for y in range(h - 1)]
    return np.array(horiz).reshape(h, w - 1), np.array(vert).reshape(h - 1, w)


@pytest.mark.parametrize("norm", ["L1", "L2", "Linf"])
def test_norms_match_pairwise_recomputation(rng, norm):
    data = rng.integers(0, 256, (4, 6, 3)).astype(np.uint8)
    f = compute_derivates(MultiChannelImage(data), norm)
    horiz, vert = _pair_oracle(data, norm)
    np.testing.assert_allclose(f.horiz, horiz, rtol=1e-12)
    np.testing.assert_allclose(f.vert, vert, rtol=1e-12)


def test_unknown_norm():
    with pytest.raises(ValueError):
        compute_derivates(MultiChannelImage(np.zeros((2, 2), np.uint8)), "L3")


@pytest.mark.parametrize("channels", [1, 2, 3, 7, 16])
def test_channel_reads_per_pair(rng, channels):
    img = MultiChannelImage(rng.integers(0, 256, (5, 8, channels)).astype(np.uint8))
    stats = {}
    compute_derivates(img, "L2", stats)
    assert stats["pairs"] == 5 * 7 + 4 * 8
    assert stats["channel_reads"] == channels * stats["pairs"]


small_images = st.builds(
    MultiChannelImage,
    arrays(np.uint8, st.tuples(st.integers(1, 7), st.integers(1, 7), st.integers(1, 4))),
)


@given(small_images, st.sampled_from(["L1", "L2", "Linf"]))
def test_magnitude_symmetry(img, norm):
    f = compute_derivates(img, norm)
    flipped = compute_derivates(MultiChannelImage(img.data[::-1, ::-1]), norm)
    np.testing.assert_array_equal(flipped.horiz, f.horiz[::-1, ::-1])
    np.testing.assert_array_equal(flipped.vert, f.vert[::-1, ::-1])


@given(small_images)
def test_l2_triangle_on_three_pixel_paths(img):
    d = img.data.astype(np.float64)
    f = compute_derivates(img, "L2")
    h, w = img.height, img.width
    # p=(x,y), q=(x+1,y), r=(x+1,y+1)
    for y in range(h - 1):
        for x in range(w - 1):
            direct = np.linalg.norm(d[y, x] - d[y + 1, x + 1])
            assert direct <= f.horiz[y, x] + f.vert[y, x + 1] + 1e-9


def test_quantize_examples():
    zero = DerivateField(3, 1, np.zeros((1, 2)), np.zeros((0, 3)))
    q = quantize(zero, 8)
    assert q.horiz.tolist() == [[0, 0]] and q.bin_width == 1 / 8
    f = DerivateField(4, 1, np.array([[0.0, 127.5, 255.0]]), np.zeros((0, 4)))
    q = quantize(f, 256, 255.0)
    assert q.horiz.tolist() == [[0, 128, 255]]
    assert q.bin_width == 255.0 / 256


def test_quantize_validation():
    f = DerivateField(2, 1, np.ones((1, 1)), np.zeros((0, 2)))
    with pytest.raises(ValueError):
        quantize(f, 1)
    with pytest.raises(ValueError):
        quantize(f, 8, 0.0)
    with pytest.raises(ValueError):
        quantize(f, 8, "max")


def test_theoretical_max():
    img = MultiChannelImage(np.zeros((2, 2, 4), np.uint8))
    assert theoretical_max(img, "L2") == pytest.approx(255 * 2)
    assert theoretical_max(img, "L1") == 255 * 4
    assert theoretical_max(img, "Linf") == 255


@given(
    arrays(np.float64, st.integers(1, 60), elements=st.floats(0, 1e4)),
    st.sampled_from([2, 4, 16, 256]),
)
def test_quantize_monotone(values, bins):
    f = DerivateField(values.size + 1, 1, values[None, :], np.zeros((0, values.size + 1)))
    q = quantize(f, bins).horiz[0]
    assert q.min() >= 0 and q.max() < bins
    order = np.argsort(values, kind="stable")
    assert (np.diff(q[order]) >= 0).all()

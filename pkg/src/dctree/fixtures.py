"""Synthetic test images used by the tests, benchmarks and demos."""
from __future__ import annotations

import numpy as np
from scipy import ndimage

from .mcimage import MultiChannelImage
from .regions import ExtractParams, GroundTruthBox, RegionSet, StableRegion

# colors of the six regions in the 6x6 toy layout; pink/red are the closest
# pair, then the two greens, orange is equidistant to red and green, and
# gray is far from everything
TOY_COLORS = {
    "gray": (255, 255, 255),
    "red": (200, 0, 0),
    "pink": (200, 10, 10),
    "orange": (100, 75, 0),
    "lightgreen": (0, 150, 30),
    "green": (0, 150, 0),
}

TOY_LAYOUT = [
    "gray gray gray gray gray gray",
    "gray red red orange lightgreen gray",
    "gray red red orange lightgreen gray",
    "gray pink pink green green gray",
    "gray pink pink green green gray",
    "gray gray gray gray gray gray",
]


def toy_image() -> tuple[MultiChannelImage, dict[str, np.ndarray]]:
    """The 6x6 five-rectangle color layout and a boolean mask per color."""
    names = [row.split() for row in TOY_LAYOUT]
    data = np.array([[TOY_COLORS[n] for n in row] for row in names], dtype=np.uint8)
    masks = {c: np.array([[n == c for n in row] for row in names]) for c in TOY_COLORS}
    return MultiChannelImage(data), masks


def two_background_square(size: int = 30, inner: int = 10, values=(0, 128, 255)) -> tuple[MultiChannelImage, np.ndarray]:
    """Center square whose left half borders a darker, right half a lighter background.

    Returns the gray image and the center-square mask.
    """
    dark, center, light = values
    img = np.full((size, size), dark, dtype=np.uint8)
    img[:, size // 2 :] = light
    lo = (size - inner) // 2
    mask = np.zeros((size, size), dtype=bool)
    mask[lo : lo + inner, lo : lo + inner] = True
    img[mask] = center
    return MultiChannelImage(img), mask


def nested_squares(
    size: int = 64, values=(0, 100, 200), widths=(48, 24), noise: float = 0.0, seed: int = 0
) -> MultiChannelImage:
    """Image filled with ``values[0]`` holding two concentric squares.

    ``noise`` adds Gaussian noise of that standard deviation, clipped to u8.
    """
    img = np.full((size, size), values[0], dtype=np.float64)
    for value, w in zip(values[1:], widths):
        lo = (size - w) // 2
        img[lo : lo + w, lo : lo + w] = value
    if noise > 0:
        img += np.random.default_rng(seed).normal(0.0, noise, img.shape)
    return MultiChannelImage(np.clip(img, 0, 255).astype(np.uint8))


def blobs(height: int = 256, width: int = 256, channels: int = 3, seed: int = 0) -> MultiChannelImage:
    """Piecewise-smooth color image: random flat patches plus mild shading."""
    rng = np.random.default_rng(seed)
    labels = np.zeros((height, width), dtype=np.int64)
    n = 40
    cy = rng.integers(0, height, n)
    cx = rng.integers(0, width, n)
    yy, xx = np.mgrid[0:height, 0:width]
    d = (yy[None] - cy[:, None, None]) ** 2 + (xx[None] - cx[:, None, None]) ** 2
    labels = np.argmin(d, axis=0)
    colors = rng.integers(20, 236, (n, channels))
    img = colors[labels].astype(np.float64)
    shade = ndimage.gaussian_filter(rng.normal(0, 40, (height, width)), 16)
    img += shade[:, :, None]
    return MultiChannelImage(np.clip(np.rint(img), 0, 255).astype(np.uint8))


def stack_channels(base: MultiChannelImage, channels: int, sigma: float = 2.0, seed: int = 0) -> MultiChannelImage:
    """``channels`` noisy copies of the base channels (cycled), 8-bit."""
    rng = np.random.default_rng(seed)
    src = base.data.astype(np.float64)
    idx = np.arange(channels) % base.channels
    out = src[:, :, idx] + rng.normal(0.0, sigma, src.shape[:2] + (channels,))
    return MultiChannelImage(np.clip(np.rint(out), 0, 255).astype(np.uint8))


def text_page(boxes: int = 10, found: int = 7, size=(60, 200), seed: int = 0):
    """Ground-truth character boxes and region boxes matching exactly ``found`` of them.

    Returns ``(gt_boxes, region_bboxes)``; unmatched boxes get a region
    shifted far enough to overlap less than 50%.
    """
    rng = np.random.default_rng(seed)
    h, w = size
    step = w // boxes
    gts = []
    regions = []
    for i in range(boxes):
        bw = int(rng.integers(8, step - 2))
        bh = int(rng.integers(12, h - 10))
        x0 = i * step + 1
        y0 = int(rng.integers(1, h - bh))
        box = (x0, y0, x0 + bw - 1, y0 + bh - 1)
        gts.append(GroundTruthBox(f"c{i}", box))
        if i < found:
            regions.append(box)
        else:
            # a sliver of the box: IoU = 1 / bw < 0.5
            regions.append((x0, y0, x0, y0 + bh - 1))
    return gts, regions


def box_regions(bboxes, width: int, height: int, params: ExtractParams = ExtractParams()) -> RegionSet:
    """Solid rectangular regions, one per inclusive ``(x0, y0, x1, y1)`` box."""
    regions = []
    for i, (x0, y0, x1, y1) in enumerate(bboxes):
        runs = np.array([(y, x0, x1 - x0 + 1) for y in range(y0, y1 + 1)], dtype=np.int64).reshape(-1, 3)
        area = (x1 - x0 + 1) * (y1 - y0 + 1)
        regions.append(StableRegion(i + 1, 0, 0, area, 0.0, (x0, y0, x1, y1), runs))
    return RegionSet(width, height, params, regions)


def textured(height: int = 256, width: int = 256, channels: int = 3, seed: int = 0) -> MultiChannelImage:
    """Natural-looking 8-bit image: multi-scale smoothed noise, correlated channels.

    Unlike :func:`blobs` it has no flat areas, so small sensor noise barely
    changes its derivate structure.
    """
    rng = np.random.default_rng(seed)
    shared = sum(ndimage.gaussian_filter(rng.normal(0, s, (height, width)), s) for s in (1, 2, 4, 8, 16))
    out = np.empty((height, width, channels))
    for c in range(channels):
        own = sum(ndimage.gaussian_filter(rng.normal(0, s, (height, width)), s) for s in (2, 8))
        out[:, :, c] = shared + 0.5 * own
    lo, hi = out.min(), out.max()
    return MultiChannelImage(np.rint(20 + 215 * (out - lo) / (hi - lo)).astype(np.uint8))

"""End-to-end MSHR and MSER extraction from images."""
from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from .ctree import ComponentTree, TreeBuildParams, build_tree
from .dgraph import build_grid, pixel_grid
from .mcimage import MultiChannelImage
from .preprocess import SmoothingParams, compute_derivates, quantize, smooth, theoretical_max
from .regions import ExtractParams, RegionSet, extract_stable


@dataclass(frozen=True)
class TreeConfig:
    """Everything that shapes a derivate tree."""

    smoothing: SmoothingParams = field(default_factory=SmoothingParams)
    norm: str = "L2"
    bins: int = 256
    # "auto", "theoretical" or a positive number
    max_magnitude: object = "auto"
    min_area: int = 1


def preprocess(image: MultiChannelImage, config: TreeConfig = TreeConfig()):
    """Smoothed image -> quantized derivates."""
    smoothed = smooth(image, config.smoothing)
    top = config.max_magnitude
    if top == "theoretical":
        top = theoretical_max(image, config.norm)
    return quantize(compute_derivates(smoothed, config.norm), config.bins, top)


def derivate_tree(image: MultiChannelImage, config: TreeConfig = TreeConfig(), timings: dict | None = None) -> ComponentTree:
    """Derivate-based component tree of a multi-channel image.

    ``timings`` (seconds) receives ``preprocess`` and ``construct``.
    """
    t0 = time.perf_counter()
    q = preprocess(image, config)
    t1 = time.perf_counter()
    tree = build_tree(build_grid(q), TreeBuildParams(bins=config.bins, min_area=config.min_area))
    t2 = time.perf_counter()
    if timings is not None:
        timings["preprocess"] = t1 - t0
        timings["construct"] = t2 - t1
    return tree


def mshr(
    image: MultiChannelImage,
    params: ExtractParams = ExtractParams(),
    config: TreeConfig = TreeConfig(),
    timings: dict | None = None,
) -> RegionSet:
    """Maximally stable homogeneous regions; works for any channel count."""
    tree = derivate_tree(image, config, timings)
    t0 = time.perf_counter()
    regions = extract_stable(tree, replace(params, polarity="none"))
    if timings is not None:
        timings["traverse"] = time.perf_counter() - t0
    return regions


def gray_levels(image: MultiChannelImage, bins: int = 256) -> tuple[np.ndarray, int]:
    """Integer gray levels of a one-channel image and their bin count.

    8-bit images keep their values; other depths are spread linearly over
    ``bins`` levels between the observed minimum and maximum.
    """
    if image.channels != 1:
        raise ValueError(f"gray-value trees need a 1-channel image, got {image.channels} channels")
    x = image.data[:, :, 0]
    if image.depth == "u8":
        return x.astype(np.int32), 256
    x = x.astype(np.float64)
    lo, hi = x.min(), x.max()
    if hi <= lo:
        return np.zeros(x.shape, dtype=np.int32), bins
    return np.minimum(bins - 1, np.floor((x - lo) / (hi - lo) * bins)).astype(np.int32), bins


def gray_tree(image: MultiChannelImage, polarity: str = "dark", bins: int = 256, min_area: int = 1) -> ComponentTree:
    """Classical component tree; ``dark`` floods from minima, ``light`` from maxima."""
    levels, bins = gray_levels(image, bins)
    if polarity == "light":
        levels = bins - 1 - levels
    elif polarity != "dark":
        raise ValueError(f"polarity must be 'light' or 'dark', got {polarity!r}")
    return build_tree(pixel_grid(levels, bins), TreeBuildParams(bins=bins, min_area=min_area))


def mser(image: MultiChannelImage, params: ExtractParams = ExtractParams(polarity="both"), bins: int = 256) -> RegionSet:
    """Gray-value MSER baseline sharing :class:`ExtractParams` with MSHR."""
    polarity = params.polarity
    if polarity == "none":
        raise ValueError("MSER needs polarity light, dark or both")
    passes = ("dark", "light") if polarity == "both" else (polarity,)
    regions = []
    for p in passes:
        for r in extract_stable(gray_tree(image, p, bins), params):
            regions.append(replace(r, id=len(regions) + 1))
    return RegionSet(image.width, image.height, params, regions)

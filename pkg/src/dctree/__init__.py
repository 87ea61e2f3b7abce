"""Derivate-based component trees for images with any number of channels.

Typical use::

    from dctree import load_image, mshr
    regions = mshr(load_image("scene.ppm"))
"""
from .ctree import (
    ComponentNode,
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
from .dgraph import DerivateGrid, DerivateId, LeveledGraph, build_grid, neighbors, pixel_grid, pixels_of
from .mcimage import ImageFormatError, LabelImage, MultiChannelImage, load_image, save_image
from .oracle import oracle_gray_tree, oracle_tree
from .pipeline import TreeConfig, derivate_tree, gray_tree, mser, mshr, preprocess
from .preprocess import DerivateField, QuantizedDerivates, SmoothingParams, compute_derivates, quantize, smooth
from .regions import (
    ExtractParams,
    GroundTruthBox,
    RegionSet,
    StableRegion,
    extract_stable,
    label_map,
    load_ground_truth,
    load_regions,
    overlay,
    pascal_overlap,
    rasterize,
    recall,
    save_regions,
    stability,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]

"""Maximally stable regions on component trees, rasterization and evaluation.

Stability of a node with level ``i`` and area ``|R_i|``::

    s = |R+| - |R-|             (difference mode)
    s = (|R+| - |R-|) / |R_i|   (ratio mode)

``R+`` is the nearest ancestor with level ``>= i + delta`` (the root if there
is none) and ``R-`` the first node at level ``<= i - delta`` on the chain that
always descends into the largest child (ties: smaller first pixel), or the
end of that chain. A node is selected when its stability is strictly below
its parent's and not above its chain child's.
"""
from __future__ import annotations

import io
from dataclasses import asdict, dataclass, field

import numpy as np
from numba import njit

from .ctree import ComponentTree, node_region
from .mcimage import LabelImage, MultiChannelImage

STABILITY_MODES = ("difference", "ratio")
POLARITIES = ("none", "light", "dark", "both")
LABEL_POLICIES = ("smallest-on-top", "largest-on-top")


class RegionFileError(ValueError):
    """Raised for malformed region or ground-truth files."""


@dataclass(frozen=True)
class ExtractParams:
    delta: int = 5
    min_area: int = 30
    max_area_fraction: float = 0.75
    stability_mode: str = "difference"
    polarity: str = "none"

    def __post_init__(self):
        if self.delta < 1:
            raise ValueError("delta must be >= 1")
        if self.min_area < 1:
            raise ValueError("min_area must be >= 1")
        if not 0 < self.max_area_fraction <= 1:
            raise ValueError("max_area_fraction must lie in (0, 1]")
        if self.stability_mode not in STABILITY_MODES:
            raise ValueError(f"unknown stability mode {self.stability_mode!r}")
        if self.polarity not in POLARITIES:
            raise ValueError(f"unknown polarity {self.polarity!r}")


@dataclass(frozen=True, eq=False)
class StableRegion:
    """One extracted region; ``runs`` rows are ``(y, x_start, run_length)``."""

    id: int
    node: int
    level: int
    area: int
    stability: float
    bbox: tuple[int, int, int, int]
    runs: np.ndarray

    def pixels(self, width: int) -> np.ndarray:
        return decode_runs(self.runs, width)

    def __eq__(self, other):
        if not isinstance(other, StableRegion):
            return NotImplemented
        return (
            (self.id, self.node, self.level, self.area, self.bbox)
            == (other.id, other.node, other.level, other.area, other.bbox)
            and self.stability == other.stability
            and np.array_equal(self.runs, other.runs)
        )


@dataclass(frozen=True, eq=False)
class RegionSet:
    width: int
    height: int
    params: ExtractParams
    regions: list[StableRegion] = field(default_factory=list)

    def __len__(self):
        return len(self.regions)

    def __iter__(self):
        return iter(self.regions)

    def __eq__(self, other):
        if not isinstance(other, RegionSet):
            return NotImplemented
        return (
            (self.width, self.height, self.params) == (other.width, other.height, other.params)
            and self.regions == other.regions
        )


@dataclass(frozen=True)
class GroundTruthBox:
    label: str
    bbox: tuple[int, int, int, int]

    def __post_init__(self):
        x0, y0, x1, y1 = self.bbox
        if x1 < x0 or y1 < y0 or min(self.bbox) < 0:
            raise ValueError(f"degenerate ground-truth box {self.bbox}")


# ---------------------------------------------------------------------------
# stability


@njit(cache=True)
def _chain_children(parent, area, first_pixel):
    m = parent.size
    best = np.full(m, -1, np.int64)
    for x in range(m):
        q = parent[x]
        if q < 0:
            continue
        b = best[q]
        if b < 0 or area[x] > area[b] or (area[x] == area[b] and first_pixel[x] < first_pixel[b]):
            best[q] = x
    return best


@njit(cache=True)
def _stabilities(parent, level, area, chain, delta, ratio):
    m = parent.size
    s = np.empty(m, np.float64)
    for x in range(m):
        up = level[x] + delta
        y = x
        q = parent[x]
        while q >= 0:
            y = q
            if level[q] >= up:
                break
            q = parent[q]
        a_plus = area[y]
        down = level[x] - delta
        y = x
        while level[y] > down and chain[y] >= 0:
            y = chain[y]
        diff = a_plus - area[y]
        s[x] = diff / area[x] if ratio else diff
    return s


def chain_children(tree: ComponentTree) -> np.ndarray:
    """Largest child of every node (-1 for leaves)."""
    return _chain_children(tree.parent, tree.area, tree.first_pixel)


def stabilities(tree: ComponentTree, delta: int, mode: str = "difference") -> np.ndarray:
    """Stability of every node at once."""
    if delta < 1:
        raise ValueError("delta must be >= 1")
    if mode not in STABILITY_MODES:
        raise ValueError(f"unknown stability mode {mode!r}")
    return _stabilities(tree.parent, tree.level, tree.area, chain_children(tree), delta, mode == "ratio")


def stability(tree: ComponentTree, node: int, delta: int, mode: str = "difference") -> float:
    tree._check(node)
    return float(stabilities(tree, delta, mode)[node])


@njit(cache=True)
def _select(parent, level, area, first_pixel, delta, ratio, min_area, max_area):
    chain = _chain_children(parent, area, first_pixel)
    s = _stabilities(parent, level, area, chain, delta, ratio)
    ok = np.zeros(parent.size, np.bool_)
    for x in range(parent.size):
        q = parent[x]
        c = chain[x]
        ok[x] = (
            min_area <= area[x] <= max_area
            and (q < 0 or s[x] <= s[q])
            and (c < 0 or s[x] < s[c])
        )
    return np.flatnonzero(ok), s


def select_stable(tree: ComponentTree, params: ExtractParams) -> tuple[np.ndarray, np.ndarray]:
    """Ids of selected nodes (ascending) and the stability of every node."""
    return _select(
        tree.parent,
        tree.level,
        tree.area,
        tree.first_pixel,
        params.delta,
        params.stability_mode == "ratio",
        params.min_area,
        params.max_area_fraction * tree.pixel_count,
    )


def extract_stable(tree: ComponentTree, params: ExtractParams = ExtractParams()) -> RegionSet:
    """Maximally stable regions of ``tree``, rasterized, ids from 1."""
    nodes, s = select_stable(tree, params)
    start, order = tree._layout
    offsets, runs, boxes = _rasterize_many(order, start, tree.area, nodes, tree.width, tree.height)
    cuts = offsets.tolist()
    regions = [
        StableRegion(i + 1, x, lv, a, st, tuple(b), runs[cuts[i] : cuts[i + 1]])
        for i, (x, lv, a, st, b) in enumerate(
            zip(nodes.tolist(), tree.level[nodes].tolist(), tree.area[nodes].tolist(), s[nodes].tolist(), boxes.tolist())
        )
    ]
    return RegionSet(tree.width, tree.height, params, regions)


# ---------------------------------------------------------------------------
# rasterization


def encode_runs(pixels: np.ndarray, width: int) -> np.ndarray:
    """Run-length encode sorted flat pixel indices into ``(y, x, length)`` rows."""
    pixels = np.asarray(pixels, dtype=np.int64)
    if pixels.size == 0:
        return np.zeros((0, 3), dtype=np.int64)
    y, x = np.divmod(pixels, width)
    cut = np.flatnonzero((np.diff(pixels) != 1) | (np.diff(y) != 0)) + 1
    starts = np.concatenate([[0], cut])
    lengths = np.diff(np.concatenate([starts, [pixels.size]]))
    return np.stack([y[starts], x[starts], lengths], axis=1)


def decode_runs(runs: np.ndarray, width: int) -> np.ndarray:
    runs = np.asarray(runs, dtype=np.int64).reshape(-1, 3)
    if runs.size == 0:
        return np.zeros(0, dtype=np.int64)
    first = runs[:, 0] * width + runs[:, 1]
    return np.concatenate([np.arange(f, f + n) for f, n in zip(first, runs[:, 2])])


@njit(cache=True)
def _rasterize_many(order, start, area, nodes, width, height):
    # mark each region on a scratch canvas, then scan its bounding box
    mark = np.zeros(width * height, np.bool_)
    total = 0
    for x in nodes:
        total += area[x]
    runs = np.empty((total, 3), np.int64)
    offsets = np.zeros(nodes.size + 1, np.int64)
    boxes = np.empty((nodes.size, 4), np.int64)
    k = 0
    for i in range(nodes.size):
        x = nodes[i]
        pix = order[start[x] : start[x] + area[x]]
        x0, y0, x1, y1 = width, height, -1, -1
        for p in pix:
            mark[p] = True
            px = p % width
            py = p // width
            x0 = min(x0, px)
            x1 = max(x1, px)
            y0 = min(y0, py)
            y1 = max(y1, py)
        for y in range(y0, y1 + 1):
            row = y * width
            inside = False
            for c in range(x0, x1 + 1):
                if mark[row + c]:
                    mark[row + c] = False
                    if not inside:
                        runs[k, 0] = y
                        runs[k, 1] = c
                        runs[k, 2] = 0
                        k += 1
                        inside = True
                    runs[k - 1, 2] += 1
                else:
                    inside = False
        boxes[i, 0] = x0
        boxes[i, 1] = y0
        boxes[i, 2] = x1
        boxes[i, 3] = y1
        offsets[i + 1] = k
    return offsets, runs[:k].copy(), boxes


def rasterize(tree: ComponentTree, node: int):
    """Tight bounding box ``(x_min, y_min, x_max, y_max)`` and RLE mask of a node."""
    pixels = node_region(tree, node)
    runs = encode_runs(pixels, tree.width)
    xs = runs[:, 1]
    bbox = (int(xs.min()), int(runs[0, 0]), int((xs + runs[:, 2] - 1).max()), int(runs[-1, 0]))
    return bbox, runs


def region_mask(region: StableRegion, width: int, height: int) -> np.ndarray:
    mask = np.zeros(width * height, dtype=bool)
    mask[region.pixels(width)] = True
    return mask.reshape(height, width)


def label_map(regions: RegionSet, policy: str = "smallest-on-top") -> LabelImage:
    """Rasterize overlapping regions; labels are renumbered densely from 1."""
    if policy not in LABEL_POLICIES:
        raise ValueError(f"unknown label policy {policy!r}")
    w, h = regions.width, regions.height
    canvas = np.zeros(w * h, dtype=np.int64)
    sign = -1 if policy == "smallest-on-top" else 1
    # painted later wins
    for r in sorted(regions.regions, key=lambda r: (sign * r.area, r.id)):
        canvas[r.pixels(w)] = r.id
    present = np.unique(canvas[canvas > 0])
    lookup = np.zeros(max(int(canvas.max()), 0) + 1, dtype=np.int64)
    lookup[present] = np.arange(1, present.size + 1)
    return LabelImage(lookup[canvas].reshape(h, w), present)


_PALETTE = np.array(
    [[255, 0, 0], [0, 200, 0], [0, 80, 255], [255, 200, 0], [255, 0, 255], [0, 220, 220]], dtype=np.uint8
)


def to_display(image: MultiChannelImage) -> np.ndarray:
    """8-bit RGB rendering of any image (channel mean for C not in {1, 3})."""
    x = image.data.astype(np.float64)
    if image.channels not in (1, 3):
        x = x.mean(axis=2, keepdims=True)
    if image.depth == "u16":
        x = x / 257.0
    elif image.depth == "f32":
        lo, hi = x.min(), x.max()
        x = (x - lo) * (255.0 / (hi - lo)) if hi > lo else np.zeros_like(x)
    x = np.clip(np.rint(x), 0, 255).astype(np.uint8)
    if x.shape[2] == 1:
        x = np.repeat(x, 3, axis=2)
    return x


def overlay(image: MultiChannelImage, regions: RegionSet) -> MultiChannelImage:
    """Copy of ``image`` with 1-pixel region boundaries in a fixed color cycle."""
    canvas = to_display(image).copy()
    for i, r in enumerate(regions.regions):
        mask = region_mask(r, regions.width, regions.height)
        padded = np.pad(mask, 1)
        interior = (
            padded[:-2, 1:-1] & padded[2:, 1:-1] & padded[1:-1, :-2] & padded[1:-1, 2:]
        )
        canvas[mask & ~interior] = _PALETTE[i % len(_PALETTE)]
    return MultiChannelImage(canvas)


# ---------------------------------------------------------------------------
# evaluation


def _box_area(b):
    return (b[2] - b[0] + 1) * (b[3] - b[1] + 1)


def pascal_overlap(region_bbox, gt) -> float:
    """Intersection over union of two inclusive pixel boxes."""
    g = gt.bbox if isinstance(gt, GroundTruthBox) else GroundTruthBox("", tuple(gt)).bbox
    r = tuple(region_bbox)
    if r[2] < r[0] or r[3] < r[1]:
        raise ValueError(f"degenerate region box {r}")
    iw = min(r[2], g[2]) - max(r[0], g[0]) + 1
    ih = min(r[3], g[3]) - max(r[1], g[1]) + 1
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    return inter / (_box_area(r) + _box_area(g) - inter)


def match_boxes(regions, gts) -> list[float]:
    """Best overlap of any region with each ground-truth box."""
    boxes = [r.bbox for r in regions]
    return [max((pascal_overlap(b, g) for b in boxes), default=0.0) for g in gts]


def recall(regions, gts, threshold: float = 0.5) -> float:
    """Fraction of ground-truth boxes overlapped by some region above ``threshold``."""
    gts = list(gts)
    if not gts:
        raise ValueError("recall is undefined for empty ground truth")
    best = match_boxes(regions, gts)
    return sum(b > threshold for b in best) / len(gts)


# ---------------------------------------------------------------------------
# files


def format_regions(regions: RegionSet) -> str:
    """``.rgn`` text: header, parameter echo, then one region per line."""
    out = io.StringIO()
    out.write(f"RGN1 {regions.width} {regions.height} {len(regions.regions)}\n")
    out.write(" ".join(f"{k}={v}" for k, v in asdict(regions.params).items()) + "\n")
    for r in regions.regions:
        head = [r.id, r.node, r.level, r.area, repr(float(r.stability)), *r.bbox, len(r.runs)]
        out.write(" ".join(str(v) for v in head))
        if len(r.runs):
            out.write(" " + " ".join(str(int(v)) for v in np.asarray(r.runs).ravel()))
        out.write("\n")
    return out.getvalue()


def parse_regions(text: str) -> RegionSet:
    lines = text.splitlines()
    try:
        magic, w, h, n = lines[0].split()
        if magic != "RGN1":
            raise ValueError
        width, height, n = int(w), int(h), int(n)
        raw = dict(kv.split("=", 1) for kv in lines[1].split())
        params = ExtractParams(
            delta=int(raw["delta"]),
            min_area=int(raw["min_area"]),
            max_area_fraction=float(raw["max_area_fraction"]),
            stability_mode=raw["stability_mode"],
            polarity=raw["polarity"],
        )
        if len(lines) != 2 + n:
            raise ValueError
        regions = []
        for line in lines[2:]:
            f = line.split()
            rid, node, level, area = (int(v) for v in f[:4])
            stab = float(f[4])
            bbox = tuple(int(v) for v in f[5:9])
            nruns = int(f[9])
            vals = [int(v) for v in f[10:]]
            if len(vals) != 3 * nruns:
                raise ValueError
            runs = np.array(vals, dtype=np.int64).reshape(nruns, 3)
            regions.append(StableRegion(rid, node, level, area, stab, bbox, runs))
    except (ValueError, IndexError, KeyError) as exc:
        raise RegionFileError("malformed region file") from exc
    return RegionSet(width, height, params, regions)


def save_regions(regions: RegionSet, path) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(format_regions(regions))


def load_regions(path) -> RegionSet:
    with open(path) as fh:
        return parse_regions(fh.read())


def parse_ground_truth(text: str) -> list[GroundTruthBox]:
    """One ``label x_min y_min x_max y_max`` box per line; blank lines ignored."""
    boxes = []
    for n, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.rsplit(maxsplit=4)
        try:
            if len(parts) != 5:
                raise ValueError(f"expected 5 fields, got {len(parts)}")
            boxes.append(GroundTruthBox(parts[0], tuple(int(v) for v in parts[1:])))
        except ValueError as exc:
            raise RegionFileError(f"line {n}: {exc}") from exc
    return boxes


def load_ground_truth(path) -> list[GroundTruthBox]:
    with open(path) as fh:
        return parse_ground_truth(fh.read())


def format_ground_truth(boxes) -> str:
    return "".join(f"{b.label} {' '.join(str(v) for v in b.bbox)}\n" for b in boxes)

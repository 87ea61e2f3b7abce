"""Edge-preserving smoothing, derivate magnitudes and their quantization.

This is the only stage whose cost depends on the number of channels: every
operation here loops over channels once and touches each sample a constant
number of times.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .mcimage import MultiChannelImage

NORMS = ("L1", "L2", "Linf")
SMOOTHING_METHODS = ("none", "bilateral", "guided")

_SAMPLE_RANGE = {"u8": 255.0, "u16": 65535.0}


@dataclass(frozen=True)
class SmoothingParams:
    method: str = "guided"
    spatial_radius: int = 2
    range_sigma: float = 10.0
    # ``None`` means (0.02 * sample range) ** 2, resolved per image.
    regularization_eps: float | None = None

    def __post_init__(self):
        if self.method not in SMOOTHING_METHODS:
            raise ValueError(f"unknown smoothing method {self.method!r}")
        if self.spatial_radius < 0:
            raise ValueError("spatial_radius must be >= 0")
        if self.method == "bilateral" and not self.range_sigma > 0:
            raise ValueError("range_sigma must be > 0 for bilateral smoothing")
        if (
            self.method == "guided"
            and self.regularization_eps is not None
            and not self.regularization_eps > 0
        ):
            raise ValueError("regularization_eps must be > 0 for guided smoothing")


@dataclass(frozen=True, eq=False)
class DerivateField:
    """Magnitudes of all differences between 4-adjacent pixels.

    ``horiz[y, x]`` is the magnitude between pixels (x, y) and (x+1, y), shape
    ``(height, width-1)``; ``vert[y, x]`` is between (x, y) and (x, y+1), shape
    ``(height-1, width)``.
    """

    width: int
    height: int
    horiz: np.ndarray
    vert: np.ndarray

    def magnitudes(self) -> np.ndarray:
        return np.concatenate([self.horiz.ravel(), self.vert.ravel()])


@dataclass(frozen=True, eq=False)
class QuantizedDerivates:
    """Bin indices of a :class:`DerivateField`, same geometry."""

    width: int
    height: int
    horiz: np.ndarray
    vert: np.ndarray
    bins: int
    bin_width: float


def sample_range(image: MultiChannelImage) -> float:
    """Nominal dynamic range of one channel (observed range for float data)."""
    if image.depth in _SAMPLE_RANGE:
        return _SAMPLE_RANGE[image.depth]
    span = float(image.data.max()) - float(image.data.min())
    return span if span > 0 else 1.0


def theoretical_max(image: MultiChannelImage, norm: str = "L2") -> float:
    """Largest magnitude the sample type allows under ``norm``."""
    r = sample_range(image)
    c = image.channels
    return {"L1": c * r, "L2": np.sqrt(c) * r, "Linf": r}[norm]


# ---------------------------------------------------------------------------
# smoothing


def smooth(image: MultiChannelImage, params: SmoothingParams = SmoothingParams()) -> MultiChannelImage:
    """Edge-preserving smoothing; the result is float32 unless method is none."""
    if params.method == "none":
        return image
    x = image.data.astype(np.float64)
    if params.spatial_radius == 0:
        return MultiChannelImage(x.astype(np.float32))
    if params.method == "guided":
        eps = params.regularization_eps
        if eps is None:
            eps = (0.02 * sample_range(image)) ** 2
        out = np.empty_like(x)
        for c in range(image.channels):
            out[:, :, c] = _guided_self(x[:, :, c], params.spatial_radius, eps)
    else:
        out = _bilateral(x, params.spatial_radius, params.range_sigma)
    return MultiChannelImage(out.astype(np.float32))


def _box(a, radius):
    return ndimage.uniform_filter(a, size=2 * radius + 1, mode="reflect")


def _guided_self(channel, radius, eps):
    # guided filter with the channel as its own guide
    mean = _box(channel, radius)
    var = np.maximum(_box(channel * channel, radius) - mean * mean, 0.0)
    a = var / (var + eps)
    b = mean - a * mean
    return _box(a, radius) * channel + _box(b, radius)


def _bilateral(x, radius, range_sigma):
    h, w, _ = x.shape
    sigma_s = max(radius / 2.0, 0.5)
    padded = np.pad(x, ((radius, radius), (radius, radius), (0, 0)), mode="reflect")
    num = np.zeros_like(x)
    den = np.zeros((h, w))
    inv_range = -0.5 / (range_sigma * range_sigma)
    for dy in range(-radius, radius + 1):
        for dx in range(-radius, radius + 1):
            ws = np.exp(-(dx * dx + dy * dy) / (2.0 * sigma_s * sigma_s))
            shifted = padded[radius + dy : radius + dy + h, radius + dx : radius + dx + w]
            dist2 = np.sum((shifted - x) ** 2, axis=2)
            wt = ws * np.exp(dist2 * inv_range)
            num += wt[:, :, None] * shifted
            den += wt
    return num / den[:, :, None]


# ---------------------------------------------------------------------------
# derivates


def compute_derivates(image: MultiChannelImage, norm: str = "L2", stats: dict | None = None) -> DerivateField:
    """Vector-norm magnitude of the channel difference of every 4-adjacent pair.

    If ``stats`` is given, ``stats["pairs"]`` receives the number of pixel pairs
    and ``stats["channel_reads"]`` the number of per-channel differences taken.
    """
    if norm not in NORMS:
        raise ValueError(f"unknown norm {norm!r}; choose from {NORMS}")
    x = image.data
    h, w, channels = x.shape
    horiz = np.zeros((h, w - 1))
    vert = np.zeros((h - 1, w))
    reads = 0
    for c in range(channels):
        plane = x[:, :, c].astype(np.float64)
        dh = plane[:, 1:] - plane[:, :-1]
        dv = plane[1:, :] - plane[:-1, :]
        reads += dh.size + dv.size
        if norm == "L2":
            horiz += dh * dh
            vert += dv * dv
        elif norm == "L1":
            horiz += np.abs(dh)
            vert += np.abs(dv)
        else:
            np.maximum(horiz, np.abs(dh), out=horiz)
            np.maximum(vert, np.abs(dv), out=vert)
    if norm == "L2":
        np.sqrt(horiz, out=horiz)
        np.sqrt(vert, out=vert)
    if stats is not None:
        stats["pairs"] = stats.get("pairs", 0) + horiz.size + vert.size
        stats["channel_reads"] = stats.get("channel_reads", 0) + reads
    return DerivateField(w, h, horiz, vert)


def quantize(field: DerivateField, bins: int = 256, max_magnitude="auto") -> QuantizedDerivates:
    """Map magnitudes to ``min(bins-1, floor(m / max_magnitude * bins))``.

    ``max_magnitude="auto"`` uses the largest observed magnitude (1 when all
    magnitudes are zero).
    """
    if bins < 2:
        raise ValueError("bins must be >= 2")
    if isinstance(max_magnitude, str):
        if max_magnitude != "auto":
            raise ValueError(f"max_magnitude must be a positive number or 'auto', got {max_magnitude!r}")
        top = 0.0
        for a in (field.horiz, field.vert):
            if a.size:
                top = max(top, float(a.max()))
        max_magnitude = top if top > 0 else 1.0
    max_magnitude = float(max_magnitude)
    if not max_magnitude > 0:
        raise ValueError("max_magnitude must be > 0")

    def q(a):
        return np.minimum(bins - 1, np.floor(a / max_magnitude * bins)).astype(np.int32)

    return QuantizedDerivates(
        field.width, field.height, q(field.horiz), q(field.vert), bins, max_magnitude / bins
    )

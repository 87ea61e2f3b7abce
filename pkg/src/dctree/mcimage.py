"""Multi-channel image container and raster file I/O.

Supported formats:

* binary PGM (P5, one channel) and PPM (P6, three channels), maxval 255 or
  65535, 16-bit samples big-endian;
* MCI, a minimal container for any channel count::

      MCI1\\n
      <width> <height> <channels> <u8|u16|f32>\\n
      <raw little-endian, row-major, channel-interleaved samples>
"""
from __future__ import annotations

import os
import re
from dataclasses import dataclass, field

import numpy as np

DEPTHS = {"u8": np.dtype("u1"), "u16": np.dtype("<u2"), "f32": np.dtype("<f4")}
FORMATS = ("pgm", "ppm", "mci")


class ImageFormatError(ValueError):
    """Raised for malformed, truncated or incompatible raster files."""


@dataclass(frozen=True, eq=False)
class MultiChannelImage:
    """Row-major, channel-interleaved raster.

    ``data`` has shape ``(height, width, channels)``; it is made read-only on
    construction so instances can be shared freely.
    """

    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.ndim == 2:
            data = data[:, :, None]
        if data.ndim != 3:
            raise ValueError(f"expected (height, width, channels) array, got shape {data.shape}")
        h, w, c = data.shape
        if h < 1 or w < 1 or c < 1:
            raise ValueError(f"zero-sized image {w}x{h}x{c}")
        kind = _depth_of(data.dtype)
        if kind == "f32" and not np.all(np.isfinite(data)):
            raise ValueError("float images must not contain NaN or Inf")
        data = np.array(data, dtype=DEPTHS[kind].newbyteorder("="), order="C", copy=True)
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    @property
    def depth(self) -> str:
        return _depth_of(self.data.dtype)

    @property
    def shape(self):
        return self.data.shape

    def __eq__(self, other):
        if not isinstance(other, MultiChannelImage):
            return NotImplemented
        return self.depth == other.depth and np.array_equal(self.data, other.data)

    def __repr__(self):
        return f"MultiChannelImage({self.width}x{self.height}x{self.channels}, {self.depth})"


@dataclass(frozen=True, eq=False)
class LabelImage:
    """Per-pixel region labels, 0 meaning unlabeled.

    ``region_ids[k - 1]`` is the id of the region drawn with label ``k`` when
    the labels were produced by :func:`dctree.regions.label_map`.
    """

    labels: np.ndarray
    region_ids: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    def __post_init__(self):
        labels = np.asarray(self.labels)
        if labels.ndim != 2 or labels.size == 0:
            raise ValueError("labels must be a non-empty 2-D array")
        if labels.size and labels.min() < 0:
            raise ValueError("labels must be non-negative")
        labels = np.array(labels, dtype=np.int64, order="C", copy=True)
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "region_ids", np.asarray(self.region_ids, dtype=np.int64))

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    @property
    def max_label(self) -> int:
        return int(self.labels.max())

    def __eq__(self, other):
        if not isinstance(other, LabelImage):
            return NotImplemented
        return np.array_equal(self.labels, other.labels)


def _depth_of(dtype) -> str:
    dtype = np.dtype(dtype)
    if dtype == np.uint8:
        return "u8"
    if dtype == np.uint16:
        return "u16"
    if dtype == np.float32:
        return "f32"
    raise ValueError(f"unsupported sample type {dtype}; use uint8, uint16 or float32")


# ---------------------------------------------------------------------------
# reading

_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")


def _netpbm_header(buf: bytes):
    """Parse ``magic width height maxval`` and return them with the data offset."""
    tokens = []
    pos = 0
    for _ in range(4):
        m = _TOKEN.match(buf, pos)
        if m is None:
            raise ImageFormatError("malformed netpbm header")
        tokens.append(m.group(1))
        pos = m.end()
    if pos >= len(buf) or not buf[pos : pos + 1].isspace():
        raise ImageFormatError("malformed netpbm header")
    magic = tokens[0]
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError as exc:
        raise ImageFormatError("malformed netpbm header") from exc
    return magic, width, height, maxval, pos + 1


def _read_netpbm(buf: bytes) -> MultiChannelImage:
    magic, width, height, maxval, offset = _netpbm_header(buf)
    channels = {b"P5": 1, b"P6": 3}.get(magic)
    if channels is None:
        raise ImageFormatError(f"unsupported netpbm magic {magic!r}; only P5/P6")
    if width < 1 or height < 1:
        raise ImageFormatError(f"zero dimensions {width}x{height}")
    if maxval == 255:
        dtype = np.dtype("u1")
    elif maxval == 65535:
        dtype = np.dtype(">u2")
    else:
        raise ImageFormatError(f"unsupported maxval {maxval}; only 255 or 65535")
    return _decode(buf, offset, width, height, channels, dtype)


def _read_mci(buf: bytes) -> MultiChannelImage:
    lines = buf.split(b"\n", 2)
    if len(lines) < 3 or lines[0] != b"MCI1":
        raise ImageFormatError("malformed MCI header")
    fields = lines[1].split()
    if len(fields) != 4:
        raise ImageFormatError("malformed MCI header")
    try:
        width, height, channels = (int(t) for t in fields[:3])
    except ValueError as exc:
        raise ImageFormatError("malformed MCI header") from exc
    depth = fields[3].decode("ascii", "replace")
    if depth not in DEPTHS:
        raise ImageFormatError(f"unknown MCI sample type {depth!r}")
    if width < 1 or height < 1 or channels < 1:
        raise ImageFormatError(f"zero dimensions {width}x{height}x{channels}")
    offset = len(lines[0]) + len(lines[1]) + 2
    return _decode(buf, offset, width, height, channels, DEPTHS[depth])


def _decode(buf, offset, width, height, channels, dtype) -> MultiChannelImage:
    count = width * height * channels
    expected = count * dtype.itemsize
    have = len(buf) - offset
    if have < expected:
        raise ImageFormatError(f"truncated data: expected {expected} bytes, found {have}")
    if have > expected:
        raise ImageFormatError(f"trailing data: expected {expected} bytes, found {have}")
    data = np.frombuffer(buf, dtype=dtype, count=count, offset=offset)
    data = data.astype(dtype.newbyteorder("="))
    try:
        return MultiChannelImage(data.reshape(height, width, channels))
    except ValueError as exc:
        raise ImageFormatError(str(exc)) from exc


def load_image(path) -> MultiChannelImage:
    """Load a PGM, PPM or MCI file, dispatching on the magic bytes."""
    with open(path, "rb") as fh:
        buf = fh.read()
    if buf.startswith(b"MCI1"):
        return _read_mci(buf)
    if buf[:1] == b"P":
        return _read_netpbm(buf)
    raise ImageFormatError(f"{os.fspath(path)}: unrecognised image format")


# ---------------------------------------------------------------------------
# writing


def _format_for(path, fmt):
    if fmt is None:
        fmt = os.path.splitext(os.fspath(path))[1].lstrip(".").lower()
    if fmt not in FORMATS:
        raise ImageFormatError(f"unknown image format {fmt!r}; choose from {FORMATS}")
    return fmt


def encode_image(image, fmt: str) -> bytes:
    """Serialize an image (or label image) to the bytes of ``fmt``."""
    if isinstance(image, LabelImage):
        if fmt != "pgm":
            raise ImageFormatError("label images are written as 16-bit PGM")
        if image.max_label > 65535:
            raise ImageFormatError(f"label {image.max_label} overflows 16-bit PGM")
        image = MultiChannelImage(image.labels.astype(np.uint16))
    if fmt == "mci":
        header = f"MCI1\n{image.width} {image.height} {image.channels} {image.depth}\n"
        return header.encode("ascii") + image.data.astype(DEPTHS[image.depth]).tobytes()

    want = 1 if fmt == "pgm" else 3
    if image.channels != want:
        raise ImageFormatError(
            f"{fmt.upper()} needs {want} channel(s), image has {image.channels}"
        )
    if image.depth == "u8":
        maxval, dtype = 255, np.dtype("u1")
    elif image.depth == "u16":
        maxval, dtype = 65535, np.dtype(">u2")
    else:
        raise ImageFormatError(f"{fmt.upper()} cannot store float samples; use MCI")
    magic = "P5" if want == 1 else "P6"
    header = f"{magic}\n{image.width} {image.height}\n{maxval}\n".encode("ascii")
    return header + image.data.astype(dtype).tobytes()


def save_image(image, path, format: str | None = None) -> None:
    """Write ``image`` to ``path``; the format defaults to the file extension."""
    payload = encode_image(image, _format_for(path, format))
    with open(path, "wb") as fh:
        fh.write(payload)

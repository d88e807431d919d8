"""Segmentation/depth ingestion, depth gating and per-nozzle zone features.

Rasters are stored row-major as numpy arrays of shape ``(height, width)``.
Zones are taken along the width axis by default, so a 1280x256 frame gives
four 320x256 strips; strip 0 maps to the top nozzle of the boom.
"""

from __future__ import annotations

import enum
import os
from dataclasses import dataclass, field

import numpy as np

MASK_MAGIC = "SEGMASK1"
DEPTH_MAGIC = "DEPTH16"
N_CLASSES = 5
DEFAULT_WIDTH = 1280
DEFAULT_HEIGHT = 256


class SegClass(enum.IntEnum):
    TREE = 0
    FRUIT = 1
    GROUND = 2
    SKY = 3
    PIPE = 4


SPRAY_CLASSES = (SegClass.TREE, SegClass.FRUIT)


class RasterFormatError(ValueError):
    """Raised for malformed or inconsistent raster files."""


@dataclass
class SegmentedFrame:
    classes: np.ndarray
    frame_id: int = 0
    timestamp: float = 0.0

    def __post_init__(self):
        self.classes = np.asarray(self.classes, dtype=np.uint8)
        if self.classes.ndim != 2:
            raise ValueError("class raster must be 2-D (height, width)")
        if self.classes.size and self.classes.max() >= N_CLASSES:
            raise RasterFormatError("class out of range")

    @property
    def height(self) -> int:
        return self.classes.shape[0]

    @property
    def width(self) -> int:
        return self.classes.shape[1]


@dataclass
class DepthFrame:
    """Per-pixel depth in meters; 0 marks an invalid reading."""

    depth: np.ndarray

    def __post_init__(self):
        self.depth = np.asarray(self.depth, dtype=np.float64)
        if self.depth.ndim != 2:
            raise ValueError("depth raster must be 2-D (height, width)")
        finite = self.depth[np.isfinite(self.depth)]
        if finite.size and finite.min() < 0:
            raise ValueError("depth values must be non-negative")

    @property
    def height(self) -> int:
        return self.depth.shape[0]

    @property
    def width(self) -> int:
        return self.depth.shape[1]


@dataclass(frozen=True)
class ZoneFeatures:
    zone_index: int
    a_p: float
    d_c: float
    v_p: float = 0.0
    valid_pixel_count: int = 0


@dataclass(frozen=True)
class ZoneView:
    """A rectangular region of a frame: rows ``r0:r1``, columns ``c0:c1``."""

    index: int
    r0: int
    r1: int
    c0: int
    c1: int
    classes: np.ndarray = field(repr=False, compare=False)

    @property
    def slices(self) -> tuple[slice, slice]:
        return slice(self.r0, self.r1), slice(self.c0, self.c1)


# -- file formats ----------------------------------------------------------

def _read_header(fh, magic: str, path) -> tuple[int, int, list[str]]:
    lines = []
    for _ in range(3):
        line = fh.readline()
        if not line.endswith(b"\n"):
            raise RasterFormatError(f"{path}: truncated header")
        try:
            lines.append(line.decode("ascii").strip())
        except UnicodeDecodeError as exc:
            raise RasterFormatError(f"{path}: non-ASCII header") from exc
    if lines[0] != magic:
        raise RasterFormatError(f"{path}: bad magic {lines[0]!r}, expected {magic!r}")
    dims = lines[1].split()
    if len(dims) != 2 or not all(d.isdigit() for d in dims):
        raise RasterFormatError(f"{path}: malformed dimension line {lines[1]!r}")
    width, height = int(dims[0]), int(dims[1])
    if width < 1 or height < 1:
        raise RasterFormatError(f"{path}: empty raster {width}x{height}")
    return width, height, lines[2].split()


def load_mask(path, frame_id: int = 0, timestamp: float = 0.0) -> SegmentedFrame:
    with open(path, "rb") as fh:
        width, height, third = _read_header(fh, MASK_MAGIC, path)
        if third != ["classes", str(N_CLASSES)]:
            raise RasterFormatError(f"{path}: expected 'classes {N_CLASSES}' header line")
        payload = fh.read()
    if len(payload) != width * height:
        raise RasterFormatError(
            f"{path}: dimension mismatch, header says {width}x{height} "
            f"({width * height} bytes) but payload has {len(payload)}"
        )
    raster = np.frombuffer(payload, dtype=np.uint8).reshape(height, width)
    if raster.max() >= N_CLASSES:
        raise RasterFormatError(f"{path}: class out of range ({int(raster.max())})")
    return SegmentedFrame(raster.copy(), frame_id=frame_id, timestamp=timestamp)


def load_depth(path) -> DepthFrame:
    with open(path, "rb") as fh:
        width, height, third = _read_header(fh, DEPTH_MAGIC, path)
        if third != ["units", "mm"]:
            raise RasterFormatError(f"{path}: expected 'units mm' header line")
        payload = fh.read()
    if len(payload) != 2 * width * height:
        raise RasterFormatError(
            f"{path}: dimension mismatch, header says {width}x{height} "
            f"({2 * width * height} bytes) but payload has {len(payload)}"
        )
    mm = np.frombuffer(payload, dtype="<u2").reshape(height, width)
    return DepthFrame(mm.astype(np.float64) / 1000.0)


def mask_bytes(classes: np.ndarray) -> bytes:
    classes = np.asarray(classes, dtype=np.uint8)
    h, w = classes.shape
    header = f"{MASK_MAGIC}\n{w} {h}\nclasses {N_CLASSES}\n".encode("ascii")
    return header + classes.tobytes(order="C")


def depth_bytes(depth_m: np.ndarray) -> bytes:
    depth_m = np.asarray(depth_m, dtype=np.float64)
    h, w = depth_m.shape
    mm = np.where(np.isfinite(depth_m), np.rint(depth_m * 1000.0), 0)
    mm = np.clip(mm, 0, 65535).astype("<u2")
    header = f"{DEPTH_MAGIC}\n{w} {h}\nunits mm\n".encode("ascii")
    return header + mm.tobytes(order="C")


def _atomic_write(path, data: bytes) -> None:
    tmp = f"{path}.tmp{os.getpid()}"
    with open(tmp, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)


def save_mask(path, frame) -> None:
    classes = frame.classes if isinstance(frame, SegmentedFrame) else frame
    _atomic_write(path, mask_bytes(classes))


def save_depth(path, frame) -> None:
    depth = frame.depth if isinstance(frame, DepthFrame) else frame
    _atomic_write(path, depth_bytes(depth))


# -- processing ------------------------------------------------------------

def _check_dims(seg: SegmentedFrame, depth: DepthFrame) -> None:
    if seg.classes.shape != depth.depth.shape:
        raise ValueError(
            f"dimension mismatch: mask {seg.width}x{seg.height}, "
            f"depth {depth.width}x{depth.height}"
        )


def fuse_depth_gate(seg: SegmentedFrame, depth: DepthFrame, max_depth: float = 2.0) -> SegmentedFrame:
    """Void (rewrite to Sky) every pixel beyond ``max_depth`` or without a valid range."""
    _check_dims(seg, depth)
    d = depth.depth
    void = ~(d > 0) | (d > max_depth) | ~np.isfinite(d)
    gated = np.where(void, np.uint8(SegClass.SKY), seg.classes)
    return SegmentedFrame(gated, frame_id=seg.frame_id, timestamp=seg.timestamp)


def _bounds(length: int, n: int) -> list[tuple[int, int]]:
    base = length // n
    edges = [i * base for i in range(n)] + [length]
    return list(zip(edges[:-1], edges[1:]))


def partition_zones(frame: SegmentedFrame, n_zones: int = 4, axis: str = "width") -> list[ZoneView]:
    """Split a frame into ``n_zones`` contiguous strips.

    When the chosen dimension is not divisible by ``n_zones`` the last strip
    absorbs the remainder.
    """
    if n_zones < 1:
        raise ValueError("n_zones must be >= 1")
    if axis not in ("width", "height"):
        raise ValueError(f"axis must be 'width' or 'height', got {axis!r}")
    h, w = frame.classes.shape
    zones = []
    if axis == "width":
        if n_zones > w:
            raise ValueError(f"cannot split width {w} into {n_zones} zones")
        for i, (c0, c1) in enumerate(_bounds(w, n_zones)):
            zones.append(ZoneView(i, 0, h, c0, c1, frame.classes[:, c0:c1]))
    else:
        if n_zones > h:
            raise ValueError(f"cannot split height {h} into {n_zones} zones")
        for i, (r0, r1) in enumerate(_bounds(h, n_zones)):
            zones.append(ZoneView(i, r0, r1, 0, w, frame.classes[r0:r1, :]))
    return zones


def compute_zone_features(zone: ZoneView, depth: np.ndarray, v_p: float = 0.0,
                          reducer: str = "median") -> ZoneFeatures:
    """Fruit-tree fraction and representative distance of one zone.

    ``depth`` is the depth region matching the zone (same shape). The zone is
    expected to come from an already gated frame.
    """
    classes = zone.classes
    depth = np.asarray(depth, dtype=np.float64)
    if depth.shape != classes.shape:
        raise ValueError(f"dimension mismatch: zone {classes.shape}, depth {depth.shape}")
    hit = (classes == SegClass.TREE) | (classes == SegClass.FRUIT)
    count = int(hit.sum())
    if count == 0:
        return ZoneFeatures(zone.index, 0.0, float("inf"), v_p, 0)
    a_p = count / classes.size
    if reducer == "median":
        d_c = float(np.median(depth[hit]))
    elif reducer == "mean":
        d_c = float(np.mean(depth[hit]))
    else:
        raise ValueError(f"unknown reducer {reducer!r}")
    return ZoneFeatures(zone.index, a_p, d_c, v_p, count)


def frame_features(seg: SegmentedFrame, depth: DepthFrame, v_p: float = 0.0, *,
                   n_zones: int = 4, axis: str = "width", max_depth: float = 2.0,
                   reducer: str = "median") -> list[ZoneFeatures]:
    """Gate a frame and compute features for each of its nozzle zones."""
    gated = fuse_depth_gate(seg, depth, max_depth)
    out = []
    for zone in partition_zones(gated, n_zones, axis):
        out.append(compute_zone_features(zone, depth.depth[zone.slices], v_p, reducer))
    return out

"""Raster types, file I/O, and the pixel statistics everything else builds on.

All rendering and metric code in this package works in linear light. PNG
files are assumed sRGB-encoded and are decoded on load; depth rides in PFM
files or 16-bit PNGs with a metric sidecar. Arrays handed to the type
constructors are locked read-only: the types own their buffers and every
operation in the package is pure.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import cv2
import numpy as np

from .errors import (
    CorruptData,
    MissingSidecar,
    NoValidPixels,
    TooSmall,
    UnsupportedFormat,
)

_PNG_MAGIC = b"\x89PNG\r\n\x1a\n"

# Rec. 709 luma weights, linear light.
_LUMA_WEIGHTS = np.array([0.2126, 0.7152, 0.0722])


def _own(arr, dtype):
    out = np.asarray(arr, dtype=dtype)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Image:
    """Linear-light RGB raster. Values are finite and non-negative; HDR
    intensities above 1 are allowed."""

    data: np.ndarray  # (H, W, 3) float64

    def __post_init__(self):
        data = _own(self.data, np.float64)
        if data.ndim != 3 or data.shape[2] != 3:
            raise ValueError(f"expected (H, W, 3) array, got {data.shape}")
        if data.shape[0] < 1 or data.shape[1] < 1:
            raise ValueError("image must be at least 1x1")
        if not np.all(np.isfinite(data)) or np.any(data < 0):
            raise ValueError("image values must be finite and >= 0")
        object.__setattr__(self, "data", data)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]


@dataclass(frozen=True)
class GrayMap:
    """Single-channel raster: luma planes, masks, scratch weights."""

    data: np.ndarray  # (H, W) float64

    def __post_init__(self):
        data = _own(self.data, np.float64)
        if data.ndim != 2 or data.shape[0] < 1 or data.shape[1] < 1:
            raise ValueError(f"expected (H, W) array, got {data.shape}")
        if not np.all(np.isfinite(data)):
            raise ValueError("gray values must be finite")
        object.__setattr__(self, "data", data)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]


@dataclass(frozen=True)
class DepthMap:
    """Metric depth in meters plus a per-pixel validity mask.

    Invalid pixels (sensor holes, zero PFM entries) carry no depth value;
    downstream disparity normalization skips them. At least one pixel must
    be valid, otherwise the map is useless and construction raises
    NoValidPixels.
    """

    data: np.ndarray  # (H, W) float64, meters
    validity: np.ndarray  # (H, W) bool

    def __post_init__(self):
        data = _own(self.data, np.float64)
        validity = _own(self.validity, bool)
        if data.ndim != 2:
            raise ValueError(f"expected (H, W) array, got {data.shape}")
        if validity.shape != data.shape:
            raise ValueError("validity mask shape differs from data")
        if not validity.any():
            raise NoValidPixels("depth map has no valid pixels")
        valid_values = data[validity]
        if not np.all(np.isfinite(valid_values)) or np.any(valid_values <= 0):
            raise ValueError("valid depth entries must be finite and > 0")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "validity", validity)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]


# ---------------------------------------------------------------------------
# sRGB transfer


def srgb_decode(encoded: np.ndarray) -> np.ndarray:
    """Piecewise sRGB EOTF: encoded [0,1] -> linear light."""
    encoded = np.asarray(encoded, dtype=np.float64)
    linear_part = encoded / 12.92
    curved_part = ((encoded + 0.055) / 1.055) ** 2.4
    return np.where(encoded <= 0.04045, linear_part, curved_part)


def srgb_encode(linear: np.ndarray) -> np.ndarray:
    """Inverse EOTF: linear light [0,1] -> sRGB-encoded [0,1]."""
    linear = np.asarray(linear, dtype=np.float64)
    small = 12.92 * linear
    # clip keeps the fractional power real for the tiny negatives np.where
    # still evaluates on the other branch
    large = 1.055 * np.clip(linear, 0.0, None) ** (1.0 / 2.4) - 0.055
    return np.where(linear <= 0.0031308, small, large)


# ---------------------------------------------------------------------------
# PNG image I/O


def _read_file(path) -> bytes:
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(str(p))
    return p.read_bytes()


def load_image(path) -> Image:
    """Load an 8- or 16-bit RGB/RGBA PNG into linear light.

    Alpha is discarded; grayscale PNGs are rejected because every caller
    treats images as color.
    """
    raw = _read_file(path)
    if not raw.startswith(_PNG_MAGIC):
        raise UnsupportedFormat(f"{path}: not a PNG file")
    decoded = cv2.imdecode(np.frombuffer(raw, np.uint8), cv2.IMREAD_UNCHANGED)
    if decoded is None:
        raise CorruptData(f"{path}: PNG payload failed to decode")
    if decoded.ndim != 3 or decoded.shape[2] not in (3, 4):
        raise UnsupportedFormat(f"{path}: expected RGB or RGBA, got shape {decoded.shape}")
    bgr = decoded[:, :, :3]
    scale = 65535.0 if bgr.dtype == np.uint16 else 255.0
    rgb = bgr[:, :, ::-1].astype(np.float64) / scale
    return Image(srgb_decode(rgb))


def save_image(img: Image, path) -> None:
    """Clamp to [0,1], sRGB-encode, write a 16-bit PNG."""
    encoded = srgb_encode(np.clip(img.data, 0.0, 1.0))
    quantized = np.round(encoded * 65535.0).astype(np.uint16)
    ok, buf = cv2.imencode(".png", quantized[:, :, ::-1])
    if not ok:
        raise OSError(f"{path}: PNG encoding failed")
    Path(path).write_bytes(buf.tobytes())


def load_mask(path) -> GrayMap:
    """Load a mask PNG as raw coverage in [0,1] (no sRGB decoding).

    Color masks are averaged down to one channel.
    """
    raw = _read_file(path)
    if not raw.startswith(_PNG_MAGIC):
        raise UnsupportedFormat(f"{path}: not a PNG file")
    decoded = cv2.imdecode(np.frombuffer(raw, np.uint8), cv2.IMREAD_UNCHANGED)
    if decoded is None:
        raise CorruptData(f"{path}: PNG payload failed to decode")
    scale = 65535.0 if decoded.dtype == np.uint16 else 255.0
    plane = decoded.astype(np.float64)
    if plane.ndim == 3:
        plane = plane[:, :, : min(3, plane.shape[2])].mean(axis=2)
    return GrayMap(plane / scale)


# ---------------------------------------------------------------------------
# Depth I/O: PFM and PNG16 + sidecar


def load_depth(path) -> DepthMap:
    """Load metric depth from a PFM file or a 16-bit PNG with JSON sidecar.

    Parameters
    ----------
    path:
        Either a PFM (``Pf`` grayscale or ``PF`` color, in which case the
        first channel is taken) or a 16-bit grayscale PNG whose sibling
        ``<stem>.json`` provides ``{"meters_per_unit": <real>}``.

    Returns
    -------
    DepthMap with non-positive and NaN entries marked invalid.
    """
    raw = _read_file(path)
    if raw.startswith(b"PF") or raw.startswith(b"Pf"):
        plane = _parse_pfm(raw, str(path))
    elif raw.startswith(_PNG_MAGIC):
        plane = _load_depth_png16(raw, path)
    else:
        raise UnsupportedFormat(f"{path}: neither PFM nor PNG")
    with np.errstate(invalid="ignore"):
        validity = np.isfinite(plane) & (plane > 0)
    data = np.where(validity, plane, 0.0)
    return DepthMap(data, validity)


def _parse_pfm(raw: bytes, name: str) -> np.ndarray:
    pos = 0

    def token():
        nonlocal pos
        while pos < len(raw) and raw[pos : pos + 1].isspace():
            pos += 1
        start = pos
        while pos < len(raw) and not raw[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise CorruptData(f"{name}: truncated PFM header")
        return raw[start:pos]

    header = token()
    if header not in (b"PF", b"Pf"):
        raise UnsupportedFormat(f"{name}: bad PFM header {header!r}")
    channels = 3 if header == b"PF" else 1
    try:
        width = int(token())
        height = int(token())
        scale = float(token())
    except ValueError as exc:
        raise CorruptData(f"{name}: malformed PFM dimensions") from exc
    if width < 1 or height < 1:
        raise CorruptData(f"{name}: non-positive PFM dimensions")
    if scale == 0:
        raise CorruptData(f"{name}: zero PFM scale")
    pos += 1  # exactly one whitespace byte separates header from raster
    count = width * height * channels
    expected = count * 4
    payload = raw[pos : pos + expected]
    if len(payload) != expected:
        raise CorruptData(f"{name}: PFM raster truncated")
    endian = "<" if scale < 0 else ">"
    values = np.frombuffer(payload, dtype=f"{endian}f4").astype(np.float64)
    grid = values.reshape(height, width, channels)[::-1, :, 0]  # rows stored bottom-up
    return np.ascontiguousarray(grid)


def save_depth(depth: DepthMap, path) -> None:
    """Write depth as a little-endian grayscale PFM; invalid pixels become 0."""
    data = np.where(depth.validity, depth.data, 0.0).astype("<f4")
    header = f"Pf\n{depth.width} {depth.height}\n-1.0\n".encode("ascii")
    Path(path).write_bytes(header + data[::-1].tobytes())


def _load_depth_png16(raw: bytes, path) -> np.ndarray:
    decoded = cv2.imdecode(np.frombuffer(raw, np.uint8), cv2.IMREAD_UNCHANGED)
    if decoded is None:
        raise CorruptData(f"{path}: PNG payload failed to decode")
    if decoded.ndim != 2 or decoded.dtype != np.uint16:
        raise UnsupportedFormat(f"{path}: depth PNG must be 16-bit grayscale")
    sidecar = Path(path).with_suffix(".json")
    if not sidecar.exists():
        raise MissingSidecar(f"{sidecar}: sidecar required for PNG16 depth")
    try:
        meta = json.loads(sidecar.read_text("utf-8"))
        meters_per_unit = float(meta["meters_per_unit"])
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise CorruptData(f"{sidecar}: bad sidecar: {exc}") from exc
    return decoded.astype(np.float64) * meters_per_unit


# ---------------------------------------------------------------------------
# Statistics


def luma(img: Image) -> GrayMap:
    """Rec. 709 luma of a linear-light image."""
    return GrayMap(img.data @ _LUMA_WEIGHTS)


def laplacian_variance(g: GrayMap) -> float:
    """Population variance of the 4-neighbor Laplacian over interior pixels.

    The classic cheap focus measure: blur flattens second derivatives, so
    sharper images score higher. Border pixels are excluded because the
    kernel does not fit there.
    """
    if g.height < 3 or g.width < 3:
        raise TooSmall("laplacian_variance needs at least 3x3")
    a = g.data
    responses = (
        a[:-2, 1:-1] + a[2:, 1:-1] + a[1:-1, :-2] + a[1:-1, 2:] - 4.0 * a[1:-1, 1:-1]
    )
    return float(np.var(responses))


__all__ = [
    "Image",
    "GrayMap",
    "DepthMap",
    "load_image",
    "save_image",
    "load_mask",
    "load_depth",
    "save_depth",
    "luma",
    "laplacian_variance",
    "srgb_decode",
    "srgb_encode",
]

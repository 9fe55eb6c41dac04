"""Aperture shapes and their rasterization into splat kernels.

A shape is analytic (circle), a simple polygon, or a grayscale raster PSF.
rasterize_kernel normalizes any of them the same way: centroid to the
kernel center, maximum centroid distance scaled to the requested radius, so
"radius" always means maximum blur extent regardless of shape.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass
from pathlib import Path

import cv2
import numpy as np

from ..errors import CorruptData, DegenerateShape, UnsupportedFormat
from ..imagecore import _PNG_MAGIC, GrayMap

BUILTIN_SHAPE_NAMES = ("circle", "triangle", "heart", "star")

_SUPERSAMPLE = 8  # samples per cell axis; 8x8 keeps thin star points accurate
_SUBSAMPLE_OFFSETS = (np.arange(_SUPERSAMPLE) + 0.5) / _SUPERSAMPLE - 0.5


def _polygon_area_centroid(verts: np.ndarray) -> tuple[float, np.ndarray]:
    x, y = verts[:, 0], verts[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    area = 0.5 * float(cross.sum())
    if abs(area) < 1e-12:
        raise DegenerateShape("polygon area is zero")
    cx = float(((x + xn) * cross).sum() / (6.0 * area))
    cy = float(((y + yn) * cross).sum() / (6.0 * area))
    return area, np.array([cx, cy])


def _segments_cross(p1, p2, p3, p4) -> bool:
    def orient(a, b, c):
        v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        return 0 if abs(v) < 1e-14 else (1 if v > 0 else -1)

    def on_seg(a, b, c):
        return (
            min(a[0], b[0]) - 1e-14 <= c[0] <= max(a[0], b[0]) + 1e-14
            and min(a[1], b[1]) - 1e-14 <= c[1] <= max(a[1], b[1]) + 1e-14
        )

    o1, o2 = orient(p1, p2, p3), orient(p1, p2, p4)
    o3, o4 = orient(p3, p4, p1), orient(p3, p4, p2)
    if o1 != o2 and o3 != o4:
        return True
    if o1 == 0 and on_seg(p1, p2, p3):
        return True
    if o2 == 0 and on_seg(p1, p2, p4):
        return True
    if o3 == 0 and on_seg(p3, p4, p1):
        return True
    if o4 == 0 and on_seg(p3, p4, p2):
        return True
    return False


def _check_simple(verts: np.ndarray) -> None:
    n = len(verts)
    for i in range(n):
        a1, a2 = verts[i], verts[(i + 1) % n]
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue  # shared endpoint with a neighbor edge is fine
            b1, b2 = verts[j], verts[(j + 1) % n]
            if _segments_cross(a1, a2, b1, b2):
                raise DegenerateShape(f"polygon self-intersects (edges {i} and {j})")


@dataclass(frozen=True)
class ApertureShape:
    """Aperture description in unit-shape coordinates (y grows downward,
    matching image rows)."""

    kind: str  # circle | polygon | raster
    polygon_vertices: np.ndarray | None = None
    raster: GrayMap | None = None
    name: str = ""  # display label carried into manifests

    def __post_init__(self):
        if self.kind == "circle":
            if self.polygon_vertices is not None or self.raster is not None:
                raise ValueError("circle carries no vertex or raster payload")
        elif self.kind == "polygon":
            verts = np.asarray(self.polygon_vertices, np.float64)
            if verts.ndim != 2 or verts.shape[1] != 2 or len(verts) < 3:
                raise ValueError("polygon needs an (N>=3, 2) vertex array")
            if not np.all(np.isfinite(verts)):
                raise ValueError("polygon vertices must be finite")
            _polygon_area_centroid(verts)  # rejects zero area
            _check_simple(verts)
            verts.setflags(write=False)
            object.__setattr__(self, "polygon_vertices", verts)
        elif self.kind == "raster":
            if self.raster is None:
                raise ValueError("raster shape needs a GrayMap")
            vals = self.raster.data
            if vals.min() < 0.0 or vals.max() > 1.0:
                raise ValueError("raster weights must lie in [0, 1]")
            if vals.sum() <= 0.0:
                raise DegenerateShape("raster carries no mass")
        else:
            raise ValueError(f"unknown shape kind {self.kind!r}")


@dataclass(frozen=True)
class Kernel:
    """A shape rasterized at one radius: (2*half_extent+1)^2 unit-sum weights."""

    radius_px: float
    half_extent: int
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, np.float64)
        side = 2 * self.half_extent + 1
        if w.shape != (side, side):
            raise ValueError(f"expected {side}x{side} weights, got {w.shape}")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)


def _supersample_grid(half_extent: int):
    centers = np.arange(-half_extent, half_extent + 1, dtype=np.float64)
    fine = (centers[:, None] + _SUBSAMPLE_OFFSETS[None, :]).ravel()
    return np.meshgrid(fine, fine, indexing="xy")


def _points_in_polygon(px, py, verts) -> np.ndarray:
    """Crossing-number test, vectorized over sample points."""
    inside = np.zeros(px.shape, bool)
    x1, y1 = verts[-1]
    for x2, y2 in verts:
        straddles = (y1 > py) != (y2 > py)
        with np.errstate(divide="ignore", invalid="ignore"):
            x_cross = x1 + (py - y1) * (x2 - x1) / (y2 - y1)
        inside ^= straddles & (px < x_cross)
        x1, y1 = x2, y2
    return inside


def _coverage_from_samples(inside: np.ndarray, half_extent: int) -> np.ndarray:
    side = 2 * half_extent + 1
    ss = _SUPERSAMPLE
    return inside.reshape(side, ss, side, ss).mean(axis=(1, 3))


def rasterize_kernel(shape: ApertureShape, radius_px: float) -> Kernel:
    """Rasterize a shape at the given maximum-extent radius.

    Coverage is estimated with 8x8 supersampling per cell for analytic
    shapes and bilinear resampling for raster shapes; weights are then
    normalized to unit sum. Radius 0 is the delta kernel by contract.
    """
    if radius_px < 0 or not math.isfinite(radius_px):
        raise ValueError("radius_px must be finite and >= 0")
    if radius_px == 0.0:
        return Kernel(0.0, 0, np.ones((1, 1)))
    half_extent = int(math.ceil(radius_px))

    if shape.kind == "circle":
        sx, sy = _supersample_grid(half_extent)
        inside = sx * sx + sy * sy <= radius_px * radius_px
        coverage = _coverage_from_samples(inside, half_extent)
    elif shape.kind == "polygon":
        verts = np.asarray(shape.polygon_vertices, np.float64)
        _, centroid = _polygon_area_centroid(verts)
        centered = verts - centroid
        max_dist = float(np.sqrt((centered**2).sum(axis=1)).max())
        if max_dist <= 0:
            raise DegenerateShape("polygon collapses to its centroid")
        scaled = centered * (radius_px / max_dist)
        sx, sy = _supersample_grid(half_extent)
        coverage = _coverage_from_samples(_points_in_polygon(sx, sy, scaled), half_extent)
    elif shape.kind == "raster":
        coverage = _resample_raster(shape.raster.data, radius_px, half_extent)
    else:  # pragma: no cover - constructor rejects unknown kinds
        raise ValueError(shape.kind)

    total = coverage.sum()
    weights = np.zeros_like(coverage)
    if total <= 0.0:
        # shape thin enough to slip between all samples at this radius:
        # collapse to a delta instead of returning an all-zero kernel
        weights[half_extent, half_extent] = 1.0
    else:
        weights = coverage / total
    return Kernel(float(radius_px), half_extent, weights)


def _resample_raster(vals: np.ndarray, radius_px: float, half_extent: int) -> np.ndarray:
    h, w = vals.shape
    total = vals.sum()
    ys, xs = np.mgrid[0:h, 0:w]
    cx = float((xs * vals).sum() / total)
    cy = float((ys * vals).sum() / total)
    support_y, support_x = np.nonzero(vals > 0)
    max_dist = float(np.sqrt((support_x - cx) ** 2 + (support_y - cy) ** 2).max())
    if max_dist == 0.0:
        out = np.zeros((2 * half_extent + 1,) * 2)
        out[half_extent, half_extent] = 1.0
        return out
    scale = max_dist / radius_px
    centers = np.arange(-half_extent, half_extent + 1, dtype=np.float64)
    gx = cx + centers[None, :] * scale
    gy = cy + centers[:, None] * scale
    return _bilinear(vals, np.broadcast_to(gx, (len(centers),) * 2), np.broadcast_to(gy, (len(centers),) * 2))


def _bilinear(vals: np.ndarray, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Sample vals at float coords; everything outside reads as 0."""
    h, w = vals.shape
    x0 = np.floor(x).astype(int)
    y0 = np.floor(y).astype(int)
    fx, fy = x - x0, y - y0

    def at(yi, xi):
        ok = (yi >= 0) & (yi < h) & (xi >= 0) & (xi < w)
        out = np.zeros(yi.shape)
        out[ok] = vals[yi[ok], xi[ok]]
        return out

    return (
        at(y0, x0) * (1 - fx) * (1 - fy)
        + at(y0, x0 + 1) * fx * (1 - fy)
        + at(y0 + 1, x0) * (1 - fx) * fy
        + at(y0 + 1, x0 + 1) * fx * fy
    )


def builtin_shape(name: str) -> ApertureShape:
    """The four stock apertures: circle, triangle, heart, star."""
    if name == "circle":
        return ApertureShape("circle", name="circle")
    if name == "triangle":
        # equilateral, apex pointing up on screen (negative y is up)
        angles = [-math.pi / 2, math.pi / 6, 5 * math.pi / 6]
        verts = [(math.cos(a), math.sin(a)) for a in angles]
        return ApertureShape("polygon", np.array(verts), name="triangle")
    if name == "star":
        return ApertureShape("polygon", _star_vertices(), name="star")
    if name == "heart":
        return ApertureShape("polygon", _heart_vertices(), name="heart")
    raise ValueError(f"unknown builtin shape {name!r}; choose from {BUILTIN_SHAPE_NAMES}")


def _star_vertices() -> np.ndarray:
    """5-point star: outer radius 1, inner radius (3 - sqrt 5)/2.

    Vertices are generated by repeated multiplication with the 72-degree
    rotation so the vertex set is rotation-symmetric to the last bit the
    construction allows.
    """
    inner = 0.5 * (3.0 - math.sqrt(5.0))
    rot72 = cmath.exp(2j * math.pi / 5)
    v_outer = cmath.exp(-1j * math.pi / 2)  # point up on screen
    v_inner = inner * cmath.exp(-1j * math.pi / 2 + 1j * math.pi / 5)
    verts = []
    for _ in range(5):
        verts.append(v_outer)
        verts.append(v_inner)
        v_outer *= rot72
        v_inner *= rot72
    return np.array([[v.real, v.imag] for v in verts])


def _heart_vertices() -> np.ndarray:
    """32 samples of the classic sextic heart curve, tip pointing down."""
    t = 2.0 * math.pi * np.arange(32) / 32.0
    x = 16.0 * np.sin(t) ** 3
    y_up = 13.0 * np.cos(t) - 5.0 * np.cos(2 * t) - 2.0 * np.cos(3 * t) - np.cos(4 * t)
    return np.column_stack([x, -y_up])  # flip: image y grows downward


def load_shape(source: str) -> ApertureShape:
    """Resolve a CLI/service shape argument.

    Accepts a builtin name, a polygon JSON file ({"vertices": [[x, y], ...]}),
    or a grayscale PNG raster PSF.
    """
    if source in BUILTIN_SHAPE_NAMES:
        return builtin_shape(source)
    path = Path(source)
    if not path.exists():
        raise FileNotFoundError(source)
    if path.suffix.lower() == ".json":
        try:
            spec = json.loads(path.read_text("utf-8"))
            verts = np.asarray(spec["vertices"], np.float64)
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise CorruptData(f"{source}: bad polygon JSON: {exc}") from exc
        return ApertureShape("polygon", verts, name=path.stem)
    raw = path.read_bytes()
    if raw.startswith(_PNG_MAGIC):
        decoded = cv2.imdecode(np.frombuffer(raw, np.uint8), cv2.IMREAD_UNCHANGED)
        if decoded is None:
            raise CorruptData(f"{source}: PNG payload failed to decode")
        if decoded.ndim == 3:
            decoded = decoded[:, :, : min(3, decoded.shape[2])].mean(axis=2)
        scale = 65535.0 if decoded.dtype == np.uint16 else 255.0
        return ApertureShape("raster", raster=GrayMap(decoded.astype(np.float64) / scale), name=path.stem)
    raise UnsupportedFormat(f"{source}: expected a builtin name, .json polygon, or PNG")

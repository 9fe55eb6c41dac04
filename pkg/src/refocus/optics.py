"""Thin-lens bookkeeping: disparity, focus planes, bokeh level, defocus maps.

Depth is normalized to disparity (inverse depth, larger = nearer) so the
rest of the pipeline never touches meters. K converts disparity offsets to
circle-of-confusion radii in pixels: r(p) = K * (d(p) - d_focus).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateFocus,
    EmptyMask,
    MissingField,
    NoValidNeighbors,
    NoValidPixels,
)
from .exif import LensMeta
from .imagecore import DepthMap, GrayMap, _own


@dataclass(frozen=True)
class DisparityMap:
    """Normalized inverse depth in [0,1]; larger values are nearer."""

    data: np.ndarray  # (H, W) float64
    validity: np.ndarray  # (H, W) bool

    def __post_init__(self):
        data = _own(self.data, np.float64)
        validity = _own(self.validity, bool)
        if data.ndim != 2 or validity.shape != data.shape:
            raise ValueError("disparity data/validity must be matching 2D arrays")
        valid_values = data[validity]
        if valid_values.size and (
            not np.all(np.isfinite(valid_values))
            or valid_values.min() < 0.0
            or valid_values.max() > 1.0
        ):
            raise ValueError("valid disparities must lie in [0, 1]")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "validity", validity)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]


@dataclass(frozen=True)
class DefocusMap:
    """Signed CoC radius per pixel: positive in front of the focus plane."""

    data: np.ndarray  # (H, W) float64, pixels

    def __post_init__(self):
        data = _own(self.data, np.float64)
        if data.ndim != 2:
            raise ValueError("defocus map must be 2D")
        if not np.all(np.isfinite(data)):
            raise ValueError("defocus values must be finite")
        object.__setattr__(self, "data", data)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]


@dataclass(frozen=True)
class FocusSpec:
    """Where to focus (disparity units) and how strong the bokeh is."""

    focus_disparity: float
    bokeh_level: float  # K, px of CoC radius per unit disparity

    def __post_init__(self):
        if not (0.0 <= self.focus_disparity <= 1.0):
            raise ValueError("focus_disparity must lie in [0, 1]")
        if not (math.isfinite(self.bokeh_level) and self.bokeh_level >= 0.0):
            raise ValueError("bokeh_level must be finite and >= 0")


def disparity_from_depth(depth: DepthMap) -> DisparityMap:
    """Normalize inverse depth to [0,1] with robust percentile scaling.

    The 1st percentile of raw 1/depth maps to 0 and the 99th to 1 (then
    clamped), which keeps depth-map speckle from dictating the range. A
    degenerate range (flat scene) maps every valid pixel to 0 so such a
    scene renders blur-free at any focus setting.
    """
    validity = depth.validity
    if not validity.any():
        raise NoValidPixels("cannot normalize an all-invalid depth map")
    raw = np.zeros(depth.data.shape)
    raw[validity] = 1.0 / depth.data[validity]
    lo, hi = np.percentile(raw[validity], [1.0, 99.0])
    if hi - lo < 1e-9:
        normalized = np.zeros_like(raw)
    else:
        normalized = np.clip((raw - lo) / (hi - lo), 0.0, 1.0)
        normalized[~validity] = 0.0
    return DisparityMap(normalized, validity)


def bokeh_level_from_exif(meta: LensMeta, pixel_ratio: float) -> float:
    """Thin-lens bokeh level: K = f^2 * S1 / (2F (S1 - f)) * pixel_ratio.

    S1 at infinity collapses to the limit f^2 / (2F). pixel_ratio converts
    the metric CoC to pixels; deriving it from sensor geometry is the
    caller's job (default 1.0 throughout the CLI).
    """
    if pixel_ratio <= 0 or not math.isfinite(pixel_ratio):
        raise ValueError("pixel_ratio must be finite and > 0")
    f = meta.focal_length_mm
    s1 = meta.focus_distance_mm
    if s1 is None:
        raise MissingField("focus distance (SubjectDistance) required for Eq-free bokeh level")
    if math.isinf(s1):
        return f * f / (2.0 * meta.f_number) * pixel_ratio
    if s1 <= f:
        raise DegenerateFocus(f"S1 = {s1} mm must exceed f = {f} mm")
    return f * f * s1 / (2.0 * meta.f_number * (s1 - f)) * pixel_ratio


def focus_disparity_at(d: DisparityMap, x: int, y: int) -> float:
    """Median valid disparity in the 5x5 neighborhood of a clicked pixel.

    The median keeps single-pixel depth noise from moving the focal plane.
    """
    if not (0 <= x < d.width and 0 <= y < d.height):
        raise ValueError(f"({x}, {y}) outside {d.width}x{d.height}")
    y0, y1 = max(0, y - 2), min(d.height, y + 3)
    x0, x1 = max(0, x - 2), min(d.width, x + 3)
    window = d.data[y0:y1, x0:x1]
    mask = d.validity[y0:y1, x0:x1]
    if not mask.any():
        raise NoValidNeighbors(f"no valid disparity around ({x}, {y})")
    return float(np.median(window[mask]))


def focus_disparity_from_mask(d: DisparityMap, mask: GrayMap) -> float:
    """Median disparity over mask > 0.5 (the annotated in-focus region)."""
    if mask.data.shape != d.data.shape:
        raise ValueError("mask dimensions differ from disparity")
    selected = (mask.data > 0.5) & d.validity
    if not selected.any():
        raise EmptyMask("mask selects no valid disparity pixels")
    return float(np.median(d.data[selected]))


def defocus_map(d: DisparityMap, spec: FocusSpec) -> DefocusMap:
    """Signed CoC radii: r(p) = K * (d(p) - focus_disparity); invalid -> 0."""
    r = spec.bokeh_level * (d.data - spec.focus_disparity)
    return DefocusMap(np.where(d.validity, r, 0.0))


__all__ = [
    "DisparityMap",
    "DefocusMap",
    "FocusSpec",
    "disparity_from_depth",
    "bokeh_level_from_exif",
    "focus_disparity_at",
    "focus_disparity_from_mask",
    "defocus_map",
]

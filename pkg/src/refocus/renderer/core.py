"""Occlusion-aware scatter rendering and its tiled driver.

The algorithm, per source pixel p with CoC radius r_p:

  1. boost   J = I^gamma (strong highlights keep their punch when averaged)
  2. splat   every target q in the radius-r_p kernel support receives
             weight w = Kernel(q - p) times the occlusion gate
             omega(p, q) = 1                         if d(p) >= d(q)
                           max(0, 1 - (d(q)-d(p))/delta)  otherwise,
             so background never bleeds over things in front of it
  3. norm    O = C / W where W has mass, else the source pixel itself
  4. unboost O^(1/gamma)

C/W normalization makes constant images exact fixed points and keeps the
result independent of splat order. Radii are snapped to 1/16 px so kernels
can be shared between pixels; the snap is far below visual or test
tolerances and exact at every integer and half-integer radius.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from ..errors import DimensionMismatch
from ..imagecore import Image
from ..optics import DefocusMap, DisparityMap
from .shapes import ApertureShape, rasterize_kernel
from . import _scatter_py

try:
    from . import _scatter as _scatter_compiled
except ImportError:  # extension not built; the fallback carries the load
    _scatter_compiled = None

RADIUS_QUANTUM = 1.0 / 16.0

_NORMALIZATION_FLOOR = 1e-9


@dataclass(frozen=True)
class RenderConfig:
    highlight_boost_gamma: float = 2.2
    occlusion_softness_delta: float = 0.05
    min_radius_px: float = 0.5
    boundary_mode: str = "clamp"
    tile_size_px: int = 512

    def __post_init__(self):
        if self.highlight_boost_gamma < 1.0:
            raise ValueError("highlight_boost_gamma must be >= 1")
        if self.occlusion_softness_delta <= 0.0:
            raise ValueError("occlusion_softness_delta must be > 0")
        if self.min_radius_px <= 0.0:
            raise ValueError("min_radius_px must be > 0")
        if self.boundary_mode not in ("clamp", "wrap"):
            raise ValueError("boundary_mode must be 'clamp' or 'wrap'")
        if self.tile_size_px < 64:
            raise ValueError("tile_size_px must be >= 64")


def active_backend() -> str:
    """Which scatter core a render will use: 'compiled' or 'python'.

    REFOCUS_PURE_PYTHON=1 forces the fallback (benchmarks, differential
    tests); otherwise the compiled extension wins when it imported.
    """
    if _scatter_compiled is None or os.environ.get("REFOCUS_PURE_PYTHON", "") not in ("", "0"):
        return "python"
    return "compiled"


def _scatter_impl():
    return _scatter_py if active_backend() == "python" else _scatter_compiled


def _check_dims(aif: Image, defocus: DefocusMap, disparity: DisparityMap) -> None:
    shape = aif.data.shape[:2]
    if defocus.data.shape != shape or disparity.data.shape != shape:
        raise DimensionMismatch(
            f"image {shape}, defocus {defocus.data.shape}, disparity {disparity.data.shape}"
        )


def _radius_map(defocus: DefocusMap, cfg: RenderConfig) -> np.ndarray:
    """Per-pixel splat radius: |defocus| floored at min_radius_px (exact
    zeros stay zero so in-focus pixels splat a delta), snapped to the
    kernel-sharing grid."""
    magnitude = np.abs(defocus.data)
    radii = np.where(magnitude > 0.0, np.maximum(magnitude, cfg.min_radius_px), 0.0)
    return np.round(radii / RADIUS_QUANTUM) * RADIUS_QUANTUM


def _kernel_tables(radii: np.ndarray, shape: ApertureShape):
    unique = np.unique(radii)
    kernel_id = np.searchsorted(unique, radii).astype(np.int32)
    half_extents = np.empty(len(unique), np.int32)
    blocks = []
    offsets = np.zeros(len(unique) + 1, np.int64)
    for i, radius in enumerate(unique):
        kernel = rasterize_kernel(shape, float(radius))
        half_extents[i] = kernel.half_extent
        blocks.append(kernel.weights.ravel())
        offsets[i + 1] = offsets[i] + blocks[-1].size
    return kernel_id, half_extents, offsets, np.concatenate(blocks)


def render_bokeh(
    aif: Image,
    defocus: DefocusMap,
    disparity: DisparityMap,
    shape: ApertureShape,
    cfg: RenderConfig = RenderConfig(),
) -> Image:
    """Scatter-render one whole frame. See the module docstring for the model."""
    _check_dims(aif, defocus, disparity)
    gamma = cfg.highlight_boost_gamma
    source = np.ascontiguousarray(aif.data)
    boosted = source if gamma == 1.0 else source**gamma

    radii = _radius_map(defocus, cfg)
    kernel_id, half_extents, offsets, weights_flat = _kernel_tables(radii, shape)

    color_acc, weight_acc = _scatter_impl().scatter_accumulate(
        boosted,
        kernel_id,
        half_extents,
        offsets,
        weights_flat,
        np.ascontiguousarray(disparity.data),
        cfg.occlusion_softness_delta,
        cfg.boundary_mode == "wrap",
    )

    covered = weight_acc > _NORMALIZATION_FLOOR
    out = np.where(covered[:, :, None], color_acc / np.where(covered, weight_acc, 1.0)[:, :, None], boosted)
    if gamma != 1.0:
        out = out ** (1.0 / gamma)
    return Image(out)


def render_tiled(
    aif: Image,
    defocus: DefocusMap,
    disparity: DisparityMap,
    shape: ApertureShape,
    cfg: RenderConfig = RenderConfig(),
) -> Image:
    """Render in tile windows with an apron wide enough that every splat
    reaching a tile interior is included, then stitch interiors (no
    blending needed -- each interior pixel sees exactly the contributions
    the whole-frame render would give it)."""
    _check_dims(aif, defocus, disparity)
    if cfg.boundary_mode == "wrap":
        # toroidal splats have no local window; wrap exists for
        # conservation tests, which run on single tiles anyway
        return render_bokeh(aif, defocus, disparity, shape, cfg)

    height, width = aif.data.shape[:2]
    tile = cfg.tile_size_px
    max_defocus = float(np.abs(defocus.data).max())
    # the radius floor can exceed |defocus| when blur is faint, so apron
    # covers both; +1 absorbs the snap-to-grid rounding
    effective_max = max(max_defocus, cfg.min_radius_px if max_defocus > 0 else 0.0)
    apron = int(math.ceil(effective_max)) + 1
    if height <= tile and width <= tile:
        return render_bokeh(aif, defocus, disparity, shape, cfg)

    out = np.empty_like(aif.data)
    for ty in range(0, height, tile):
        for tx in range(0, width, tile):
            y1, x1 = min(ty + tile, height), min(tx + tile, width)
            wy0, wx0 = max(0, ty - apron), max(0, tx - apron)
            wy1, wx1 = min(height, y1 + apron), min(width, x1 + apron)
            window = render_bokeh(
                Image(aif.data[wy0:wy1, wx0:wx1]),
                DefocusMap(defocus.data[wy0:wy1, wx0:wx1]),
                DisparityMap(
                    disparity.data[wy0:wy1, wx0:wx1], disparity.validity[wy0:wy1, wx0:wx1]
                ),
                shape,
                cfg,
            )
            out[ty:y1, tx:x1] = window.data[ty - wy0 : y1 - wy0, tx - wx0 : x1 - wx0]
    return Image(out)


__all__ = ["RenderConfig", "render_bokeh", "render_tiled", "active_backend", "RADIUS_QUANTUM"]

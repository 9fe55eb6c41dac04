"""Shape-aware, occlusion-gated bokeh rendering."""

from .core import RADIUS_QUANTUM, RenderConfig, active_backend, render_bokeh, render_tiled
from .shapes import (
    BUILTIN_SHAPE_NAMES,
    ApertureShape,
    Kernel,
    builtin_shape,
    load_shape,
    rasterize_kernel,
)

__all__ = [
    "ApertureShape",
    "Kernel",
    "RenderConfig",
    "BUILTIN_SHAPE_NAMES",
    "RADIUS_QUANTUM",
    "active_backend",
    "builtin_shape",
    "load_shape",
    "rasterize_kernel",
    "render_bokeh",
    "render_tiled",
]

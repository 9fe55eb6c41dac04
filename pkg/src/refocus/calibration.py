"""Blur-strength calibration against a reference photograph.

Given an all-in-focus frame, its disparity, and a real shallow
depth-of-field image of the same scene, find the blur level K whose
simulated render best matches the reference under SSIM. The search
walks a coarse log-spaced grid to locate the basin, then tightens with
golden-section steps until the bracket is narrower than the requested
tolerance (in pixels of blur radius).

Matching runs on copies downscaled to a bounded working size, with K
compensated by the same factor, so the search cost stays flat no
matter how large the source frames are.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import cv2
import numpy as np
from scipy.ndimage import correlate1d

from .errors import DimensionMismatch, InvalidBounds, TooSmall
from .imagecore import Image, luma
from .optics import DisparityMap, FocusSpec, defocus_map
from .renderer import ApertureShape, RenderConfig, render_tiled

# working resolution for metric evaluation; renders above this are
# downscaled (and K with them) before comparing
METRIC_MAX_SIDE = 512

_WINDOW_RADIUS = 5
_SIGMA = 1.5
_C1 = 0.01**2
_C2 = 0.03**2
_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class SearchBounds:
    """Domain and stopping rule for the blur-level search."""

    k_min: float = 0.0
    k_max: float = 64.0
    tolerance_px: float = 0.25
    coarse_samples: int = 8

    def __post_init__(self):
        if not (math.isfinite(self.k_min) and self.k_min >= 0.0):
            raise InvalidBounds(f"k_min must be finite and >= 0, got {self.k_min}")
        if not (math.isfinite(self.k_max) and self.k_max > self.k_min):
            raise InvalidBounds(f"k_max must exceed k_min, got [{self.k_min}, {self.k_max}]")
        if not (self.tolerance_px > 0.0):
            raise InvalidBounds("tolerance_px must be > 0")
        if self.coarse_samples < 2:
            raise InvalidBounds("coarse_samples must be >= 2")


@dataclass(frozen=True)
class CalibrationResult:
    k_star: float
    ssim_at_k_star: float
    trace: tuple
    iterations: int


def _window() -> np.ndarray:
    x = np.arange(-_WINDOW_RADIUS, _WINDOW_RADIUS + 1, dtype=float)
    g = np.exp(-(x**2) / (2.0 * _SIGMA**2))
    return g / g.sum()


def _local_means(plane: np.ndarray, win: np.ndarray) -> np.ndarray:
    # separable blur, then crop so only fully-supported windows remain
    t = correlate1d(plane, win, axis=0, mode="constant")
    t = correlate1d(t, win, axis=1, mode="constant")
    return t[_WINDOW_RADIUS:-_WINDOW_RADIUS, _WINDOW_RADIUS:-_WINDOW_RADIUS]


def ssim(a: Image, b: Image) -> float:
    """Single-scale structural similarity between two frames.

    Operates on luma in linear light, clamped to [0, 1] (dynamic range
    1), with an 11x11 Gaussian window. Averages over every position
    where the window fits entirely inside the frame.
    """
    if a.data.shape != b.data.shape:
        raise DimensionMismatch(f"{a.data.shape} vs {b.data.shape}")
    h, w = a.data.shape[:2]
    if min(h, w) < 2 * _WINDOW_RADIUS + 1:
        raise TooSmall(f"need at least 11 pixels per side, got {h}x{w}")

    x = np.clip(luma(a).data, 0.0, 1.0)
    y = np.clip(luma(b).data, 0.0, 1.0)
    win = _window()
    mu_x = _local_means(x, win)
    mu_y = _local_means(y, win)
    var_x = _local_means(x * x, win) - mu_x**2
    var_y = _local_means(y * y, win) - mu_y**2
    cov = _local_means(x * y, win) - mu_x * mu_y
    score = ((2.0 * mu_x * mu_y + _C1) * (2.0 * cov + _C2)) / (
        (mu_x**2 + mu_y**2 + _C1) * (var_x + var_y + _C2)
    )
    return float(score.mean())


def downscale_for_metric(img: Image, max_side: int) -> Image:
    """Box-filter the frame down so its longer side is max_side.

    Frames already small enough pass through untouched.
    """
    if max_side < 32:
        raise ValueError(f"max_side must be >= 32, got {max_side}")
    h, w = img.data.shape[:2]
    longest = max(h, w)
    if longest <= max_side:
        return img
    scale = max_side / longest
    new_w = max(1, round(w * scale))
    new_h = max(1, round(h * scale))
    shrunk = cv2.resize(img.data, (new_w, new_h), interpolation=cv2.INTER_AREA)
    return Image(np.maximum(shrunk, 0.0))


def _shrink_disparity(d: DisparityMap, new_h: int, new_w: int) -> DisparityMap:
    data = cv2.resize(d.data, (new_w, new_h), interpolation=cv2.INTER_AREA)
    valid = (
        cv2.resize(d.validity.astype(np.float64), (new_w, new_h), interpolation=cv2.INTER_AREA)
        > 0.5
    )
    return DisparityMap(np.clip(data, 0.0, 1.0), valid)


def calibrate_bokeh_level(
    aif: Image,
    disparity: DisparityMap,
    focus_disparity: float,
    target: Image,
    shape: ApertureShape,
    bounds: SearchBounds,
    cfg: RenderConfig = RenderConfig(),
) -> CalibrationResult:
    """Search for the blur level whose render best matches `target`.

    Coarse stage: the objective f(K) = SSIM(render at K, target) is
    sampled at `coarse_samples` log-spaced levels (plus K = k_min when
    the log grid cannot reach it). Refinement: golden-section steps
    inside the bracket around the coarse argmax until the bracket is
    narrower than tolerance_px. The best K ever evaluated wins, and the
    full evaluation trace is returned.
    """
    if aif.data.shape != target.data.shape:
        raise DimensionMismatch(f"aif {aif.data.shape} vs target {target.data.shape}")
    if aif.data.shape[:2] != disparity.data.shape:
        raise DimensionMismatch(f"aif {aif.data.shape} vs disparity {disparity.data.shape}")
    if not isinstance(bounds, SearchBounds):
        raise InvalidBounds("bounds must be a SearchBounds")

    small_aif = downscale_for_metric(aif, METRIC_MAX_SIDE)
    small_target = downscale_for_metric(target, METRIC_MAX_SIDE)
    sh, sw = small_aif.data.shape[:2]
    factor = max(sh, sw) / max(aif.data.shape[:2])
    small_disp = disparity if factor == 1.0 else _shrink_disparity(disparity, sh, sw)

    memo: dict = {}
    trace: list = []

    def f(k: float) -> float:
        k = float(k)
        if k in memo:
            return memo[k]
        blur = defocus_map(small_disp, FocusSpec(focus_disparity, k * factor))
        rendered = render_tiled(small_aif, blur, small_disp, shape, cfg)
        value = ssim(rendered, small_target)
        memo[k] = value
        trace.append((k, value))
        return value

    grid = np.geomspace(max(bounds.k_min, 1e-3), bounds.k_max, bounds.coarse_samples)
    for k in grid:
        f(k)
    f(bounds.k_min)

    candidates = np.array(sorted(memo))
    scores = np.array([memo[k] for k in candidates])
    best = int(np.argmax(scores))
    lo = candidates[max(best - 1, 0)]
    hi = candidates[min(best + 1, len(candidates) - 1)]
    _golden_max(f, float(lo), float(hi), bounds.tolerance_px)

    k_star, score = max(trace, key=lambda pair: pair[1])
    return CalibrationResult(
        k_star=k_star, ssim_at_k_star=score, trace=tuple(trace), iterations=len(trace)
    )


def _golden_max(f, a: float, b: float, tol: float) -> None:
    """Golden-section ascent on [a, b], driving the objective's memo.

    The final interior refresh is skipped once the bracket is tight
    enough: the caller picks its answer from the trace, so that last
    evaluation could never change the outcome.
    """
    if b - a <= tol:
        return
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while True:
        if fc >= fd:
            b, d, fd = d, c, fc
            if b - a <= tol:
                return
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            if b - a <= tol:
                return
            d = a + _INV_PHI * (b - a)
            fd = f(d)

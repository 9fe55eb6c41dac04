import math

import cv2
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from refocus.calibration import (
    METRIC_MAX_SIDE,
    CalibrationResult,
    SearchBounds,
    calibrate_bokeh_level,
    downscale_for_metric,
    ssim,
)
from refocus.errors import DimensionMismatch, InvalidBounds, TooSmall
from refocus.imagecore import Image
from refocus.optics import DisparityMap, FocusSpec, defocus_map
from refocus.renderer import RenderConfig, builtin_shape, render_tiled


def naive_ssim(a: Image, b: Image) -> float:
    """Direct per-window reference: explicit 11x11 loops, no separability."""
    coeff = np.array([0.2126, 0.7152, 0.0722])
    x = np.clip(a.data @ coeff, 0.0, 1.0)
    y = np.clip(b.data @ coeff, 0.0, 1.0)
    ii, jj = np.mgrid[-5:6, -5:6]
    win = np.exp(-(ii**2 + jj**2) / (2.0 * 1.5**2))
    win /= win.sum()
    c1, c2 = 0.01**2, 0.03**2
    h, w = x.shape
    scores = []
    for cy in range(5, h - 5):
        for cx in range(5, w - 5):
            px = x[cy - 5 : cy + 6, cx - 5 : cx + 6]
            py = y[cy - 5 : cy + 6, cx - 5 : cx + 6]
            mx, my = (win * px).sum(), (win * py).sum()
            vx = (win * px * px).sum() - mx * mx
            vy = (win * py * py).sum() - my * my
            cxy = (win * px * py).sum() - mx * my
            scores.append(
                ((2 * mx * my + c1) * (2 * cxy + c2))
                / ((mx * mx + my * my + c1) * (vx + vy + c2))
            )
    return float(np.mean(scores))


def rand_image(seed, h=20, w=24):
    rng = np.random.default_rng(seed)
    return Image(rng.uniform(0.0, 1.0, (h, w, 3)))


class TestSsim:
    def test_self_similarity_is_one(self):
        img = rand_image(1)
        assert ssim(img, img) == pytest.approx(1.0, abs=1e-9)

    def test_matches_per_window_reference(self):
        a, b = rand_image(2, 17, 23), rand_image(3, 17, 23)
        assert ssim(a, b) == pytest.approx(naive_ssim(a, b), abs=1e-9)

    def test_constant_pair_closed_form(self):
        a = Image(np.full((16, 16, 3), 0.5))
        b = Image(np.full((16, 16, 3), 0.6))
        # zero variance collapses the structure term to exactly 1
        expected = (2 * 0.5 * 0.6 + 0.01**2) / (0.5**2 + 0.6**2 + 0.01**2)
        assert ssim(a, b) == pytest.approx(expected, abs=1e-9)

    @given(seed=st.integers(0, 1000))
    @settings(max_examples=20, deadline=None)
    def test_symmetry(self, seed):
        a, b = rand_image(seed, 14, 14), rand_image(seed + 7000, 14, 14)
        assert ssim(a, b) == pytest.approx(ssim(b, a), abs=1e-12)

    def test_flip_invariance(self):
        a, b = rand_image(4), rand_image(5)
        fa = Image(a.data[:, ::-1].copy())
        fb = Image(b.data[:, ::-1].copy())
        assert ssim(fa, fb) == pytest.approx(ssim(a, b), abs=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            ssim(rand_image(0, 16, 16), rand_image(0, 16, 17))

    def test_too_small(self):
        with pytest.raises(TooSmall):
            ssim(rand_image(0, 10, 30), rand_image(1, 10, 30))


class TestDownscale:
    def test_small_frame_passthrough(self):
        img = rand_image(6, 40, 40)
        out = downscale_for_metric(img, 512)
        np.testing.assert_array_equal(out.data, img.data)

    def test_exact_side_passthrough(self):
        img = rand_image(7, 512, 100)
        assert downscale_for_metric(img, 512) is img

    def test_aspect_preserved(self):
        img = Image(np.zeros((512, 1024, 3)))
        out = downscale_for_metric(img, 512)
        assert out.data.shape == (256, 512, 3)

    def test_constant_preserved(self):
        img = Image(np.full((300, 200, 3), 0.42))
        out = downscale_for_metric(img, 150)
        assert out.data.shape == (150, 100, 3)
        np.testing.assert_allclose(out.data, 0.42, atol=1e-12)

    def test_max_side_floor(self):
        with pytest.raises(ValueError):
            downscale_for_metric(rand_image(8), 31)


class TestSearchBounds:
    def test_defaults(self):
        b = SearchBounds()
        assert (b.k_min, b.k_max, b.tolerance_px, b.coarse_samples) == (0.0, 64.0, 0.25, 8)

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"k_min": -1.0},
            {"k_min": 5.0, "k_max": 5.0},
            {"k_min": 5.0, "k_max": 4.0},
            {"tolerance_px": 0.0},
            {"coarse_samples": 1},
        ],
    )
    def test_rejects_bad_values(self, kwargs):
        with pytest.raises(InvalidBounds):
            SearchBounds(**kwargs)


def two_plane_scene(seed, h, w, near=0.8, far=0.6):
    # texture at two scales so the SSIM objective stays informative
    # across the whole blur range, not just near zero
    rng = np.random.default_rng(seed)
    smooth = cv2.resize(rng.uniform(0, 1, (12, 12, 3)), (w, h), interpolation=cv2.INTER_LINEAR)
    aif = Image(np.clip(0.7 * smooth + 0.3 * rng.uniform(0, 1, (h, w, 3)), 0, 1))
    disparity = np.full((h, w), far)
    disparity[:, : w // 2] = near
    return aif, DisparityMap(disparity, np.ones((h, w), bool))


def trace_cap(bounds):
    steps = math.ceil(
        math.log((bounds.k_max - bounds.k_min) / bounds.tolerance_px) / math.log(1 / 0.618)
    )
    return bounds.coarse_samples + steps + 2


class TestCalibrate:
    def test_render_then_recover(self):
        aif, disp = two_plane_scene(11, 96, 96)
        shape = builtin_shape("circle")
        cfg = RenderConfig()
        k_true = 25.0
        target = render_tiled(aif, defocus_map(disp, FocusSpec(0.8, k_true)), disp, shape, cfg)
        bounds = SearchBounds(k_min=0.0, k_max=100.0)
        res = calibrate_bokeh_level(aif, disp, 0.8, target, shape, bounds, cfg)
        assert abs(res.k_star - k_true) <= max(0.05 * k_true, bounds.tolerance_px)
        assert res.ssim_at_k_star >= 0.98
        assert res.iterations <= trace_cap(bounds)
        assert bounds.k_min <= res.k_star <= bounds.k_max

    def test_sharp_target_prefers_minimal_blur(self):
        aif, disp = two_plane_scene(12, 36, 36)
        shape = builtin_shape("circle")
        bounds = SearchBounds(k_min=0.0, k_max=100.0)
        res = calibrate_bokeh_level(aif, disp, 0.8, aif, shape, bounds)
        smallest_positive = 1e-3  # the log grid's low end when k_min is 0
        assert res.k_star <= smallest_positive
        assert all(res.ssim_at_k_star >= s for _, s in res.trace)
        assert res.iterations <= trace_cap(bounds)

    def test_reported_score_reproducible(self):
        aif, disp = two_plane_scene(13, 36, 36)
        shape = builtin_shape("star")
        cfg = RenderConfig()
        target = render_tiled(aif, defocus_map(disp, FocusSpec(0.8, 9.0)), disp, shape, cfg)
        res = calibrate_bokeh_level(aif, disp, 0.8, target, shape, SearchBounds(), cfg)
        again = ssim(
            render_tiled(aif, defocus_map(disp, FocusSpec(0.8, res.k_star)), disp, shape, cfg),
            target,
        )
        assert res.ssim_at_k_star == pytest.approx(again, abs=1e-9)

    def test_trace_is_the_whole_story(self):
        aif, disp = two_plane_scene(14, 36, 36)
        shape = builtin_shape("circle")
        target = render_tiled(aif, defocus_map(disp, FocusSpec(0.8, 5.0)), disp, shape)
        res = calibrate_bokeh_level(aif, disp, 0.8, target, shape, SearchBounds())
        assert isinstance(res, CalibrationResult)
        assert res.iterations == len(res.trace)
        assert (res.k_star, res.ssim_at_k_star) in set(res.trace)
        assert res.ssim_at_k_star == max(s for _, s in res.trace)

    def test_deterministic(self):
        aif, disp = two_plane_scene(15, 32, 32)
        shape = builtin_shape("circle")
        target = render_tiled(aif, defocus_map(disp, FocusSpec(0.8, 4.0)), disp, shape)
        r1 = calibrate_bokeh_level(aif, disp, 0.8, target, shape, SearchBounds())
        r2 = calibrate_bokeh_level(aif, disp, 0.8, target, shape, SearchBounds())
        assert r1.trace == r2.trace
        assert r1.k_star == r2.k_star

    def test_recovers_in_original_units_after_downscale(self):
        # 600px frames run the metric at 512px with K compensated; the
        # answer must still come back in source-resolution units
        aif, disp = two_plane_scene(16, 600, 600)
        shape = builtin_shape("circle")
        cfg = RenderConfig()
        k_true = 8.0
        target = render_tiled(aif, defocus_map(disp, FocusSpec(0.8, k_true)), disp, shape, cfg)
        assert max(target.data.shape) > METRIC_MAX_SIDE
        bounds = SearchBounds(k_min=4.0, k_max=16.0, tolerance_px=0.5, coarse_samples=4)
        res = calibrate_bokeh_level(aif, disp, 0.8, target, shape, bounds, cfg)
        assert abs(res.k_star - k_true) <= 0.8
        assert res.iterations <= trace_cap(bounds)

    def test_target_dimension_mismatch(self):
        aif, disp = two_plane_scene(17, 32, 32)
        with pytest.raises(DimensionMismatch):
            calibrate_bokeh_level(
                aif, disp, 0.8, rand_image(0, 32, 33), builtin_shape("circle"), SearchBounds()
            )

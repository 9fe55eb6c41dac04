"""Command-line interface.

Subcommands cover the whole pipeline: rendering a refocused image,
recovering a blur strength from a reference photo, producing training
manifests, ranking images by sharpness, and running the HTTP service.

Exit codes are stable so scripts can branch on them:

  0  success
  2  bad flags (argparse errors, conflicting or out-of-range values)
  3  unreadable or unwritable files
  4  raster dimensions that should match do not
  5  calibration failed
  6  a datagen run produced no samples
  7  port invalid or unavailable

Flag problems are reported before any file is opened.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from .calibration import SearchBounds, calibrate_bokeh_level
from .errors import DimensionMismatch, InvalidBounds, RefocusError
from .imagecore import load_depth, load_image, load_mask, save_image
from .optics import (
    FocusSpec,
    defocus_map,
    disparity_from_depth,
    focus_disparity_at,
    focus_disparity_from_mask,
)
from .renderer import RADIUS_QUANTUM, RenderConfig, load_shape, render_tiled

EXIT_OK = 0
EXIT_FLAGS = 2
EXIT_IO = 3
EXIT_DIMS = 4
EXIT_CALIBRATION = 5
EXIT_NO_SAMPLES = 6
EXIT_PORT = 7

_RC = RenderConfig()
_SB = SearchBounds()

_IO_ERRORS = (OSError, RefocusError)


def _fail(code: int, message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def _emit(summary: dict) -> None:
    print(json.dumps(summary))


# ---------------------------------------------------------------------------
# render


def cmd_render(args) -> int:
    xy_given = (args.focus_x is not None, args.focus_y is not None)
    if args.focus_disparity is not None:
        if any(xy_given):
            return _fail(EXIT_FLAGS, "--focus-disparity conflicts with --focus-x/--focus-y")
        if not (0.0 <= args.focus_disparity <= 1.0):
            return _fail(EXIT_FLAGS, "--focus-disparity must lie in [0, 1]")
    elif not all(xy_given):
        return _fail(EXIT_FLAGS, "need --focus-x and --focus-y together, or --focus-disparity")
    if not (math.isfinite(args.k) and args.k >= 0.0):
        return _fail(EXIT_FLAGS, f"--k must be finite and >= 0, got {args.k}")
    try:
        cfg = RenderConfig(
            highlight_boost_gamma=args.gamma,
            boundary_mode="wrap" if args.wrap else "clamp",
            tile_size_px=args.tile_size,
        )
    except ValueError as exc:
        return _fail(EXIT_FLAGS, str(exc))

    try:
        shape = load_shape(args.shape)
        aif = load_image(args.image)
        depth = load_depth(args.depth)
    except _IO_ERRORS as exc:
        return _fail(EXIT_IO, str(exc))

    try:
        disparity = disparity_from_depth(depth)
        if disparity.data.shape != aif.data.shape[:2]:
            raise DimensionMismatch(
                f"image {aif.data.shape[:2]} vs depth {disparity.data.shape}"
            )
        if args.focus_disparity is not None:
            focus = args.focus_disparity
        else:
            focus = focus_disparity_at(disparity, args.focus_x, args.focus_y)
        blur = defocus_map(disparity, FocusSpec(focus, args.k))
        out = render_tiled(aif, blur, disparity, shape, cfg)
    except DimensionMismatch as exc:
        return _fail(EXIT_DIMS, str(exc))
    except ValueError as exc:
        return _fail(EXIT_FLAGS, str(exc))
    except _IO_ERRORS as exc:
        return _fail(EXIT_IO, str(exc))

    try:
        save_image(out, args.out)
    except OSError as exc:
        return _fail(EXIT_IO, str(exc))

    peak = float(np.abs(blur.data).max())
    if peak > 0.0:
        peak = max(peak, cfg.min_radius_px)
    peak = round(peak / RADIUS_QUANTUM) * RADIUS_QUANTUM
    _emit({"focus_disparity": focus, "k": args.k, "max_radius_px": peak})
    return EXIT_OK


# ---------------------------------------------------------------------------
# calibrate


def cmd_calibrate(args) -> int:
    try:
        bounds = SearchBounds(
            k_min=args.k_min,
            k_max=args.k_max,
            tolerance_px=args.tol,
            coarse_samples=args.coarse,
        )
    except InvalidBounds as exc:
        return _fail(EXIT_FLAGS, str(exc))

    try:
        shape = load_shape(args.shape)
        aif = load_image(args.aif)
        depth = load_depth(args.depth)
        mask = load_mask(args.mask)
        target = load_image(args.target)
    except _IO_ERRORS as exc:
        return _fail(EXIT_IO, str(exc))

    h, w = aif.data.shape[:2]
    for label, shape2d in (
        ("depth", depth.data.shape),
        ("mask", mask.data.shape),
        ("target", target.data.shape[:2]),
    ):
        if shape2d != (h, w):
            return _fail(EXIT_DIMS, f"{label} is {shape2d}, image is {(h, w)}")

    try:
        disparity = disparity_from_depth(depth)
        focus = focus_disparity_from_mask(disparity, mask)
        result = calibrate_bokeh_level(aif, disparity, focus, target, shape, bounds)
    except (RefocusError, ValueError) as exc:
        return _fail(EXIT_CALIBRATION, str(exc))

    _emit(
        {
            "k_star": result.k_star,
            "ssim": result.ssim_at_k_star,
            "iterations": result.iterations,
        }
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# datagen


def cmd_datagen(args) -> int:
    from . import datagen

    build = {
        "synthetic": _synthetic_samples,
        "exif": _exif_samples,
        "calibrated": _calibrated_samples,
    }[args.route]
    samples = build(args)
    if not samples:
        return _fail(EXIT_NO_SAMPLES, "no samples produced")
    try:
        datagen.append_manifest(samples, args.manifest)
    except (OSError, FileNotFoundError) as exc:
        return _fail(EXIT_IO, str(exc))
    _emit({"written": len(samples), "manifest": str(args.manifest)})
    return EXIT_OK


def _skip(path, exc) -> None:
    print(f"skipping {path}: {exc}", file=sys.stderr)


def _synthetic_samples(args) -> list:
    from .datagen import generate_synthetic_sample

    if len(args.aif) != len(args.depth):
        # argparse cannot express paired list lengths, so this stays a
        # flag error even though it surfaces after parsing
        print("error: --aif and --depth need the same number of paths", file=sys.stderr)
        raise SystemExit(EXIT_FLAGS)
    if args.k_min <= 0 or args.k_max < args.k_min:
        print("error: need 0 < --k-min <= --k-max", file=sys.stderr)
        raise SystemExit(EXIT_FLAGS)
    try:
        shape = load_shape(args.shape)
    except _IO_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_IO)
    samples = []
    for offset, (aif_path, depth_path) in enumerate(zip(args.aif, args.depth)):
        try:
            sample = generate_synthetic_sample(
                load_image(aif_path),
                load_depth(depth_path),
                args.seed + offset,
                (args.k_min, args.k_max),
                shape,
                RenderConfig(),
                args.out_dir,
            )
        except (OSError, RefocusError, ValueError) as exc:
            _skip(aif_path, exc)
            continue
        samples.append(sample)
    return samples


def _exif_samples(args) -> list:
    from .datagen import annotate_real_exif

    try:
        exif_bytes = Path(args.exif).read_bytes()
        mask = load_mask(args.mask)
        sample = annotate_real_exif(
            args.bokeh,
            exif_bytes,
            args.aif,
            args.depth,
            mask,
            args.pixel_ratio,
            Path(args.manifest).parent,
        )
    except (OSError, RefocusError, ValueError) as exc:
        _skip(args.bokeh, exc)
        return []
    return [sample]


def _calibrated_samples(args) -> list:
    from .datagen import calibrate_real_pair

    try:
        bounds = SearchBounds(
            k_min=args.k_min,
            k_max=args.k_max,
            tolerance_px=args.tol,
            coarse_samples=args.coarse,
        )
    except InvalidBounds as exc:
        print(f"error: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_FLAGS)
    try:
        sample = calibrate_real_pair(
            args.aif,
            args.depth,
            load_mask(args.mask),
            args.bokeh,
            bounds,
            load_shape(args.shape),
            RenderConfig(),
            Path(args.manifest).parent,
        )
    except (OSError, RefocusError, ValueError) as exc:
        _skip(args.bokeh, exc)
        return []
    return [sample]


# ---------------------------------------------------------------------------
# sharpness


def cmd_sharpness(args) -> int:
    from .datagen import filter_sharp

    if args.top < 1:
        return _fail(EXIT_FLAGS, "--top must be >= 1")
    root = Path(args.dir)
    if not root.is_dir():
        return _fail(EXIT_IO, f"not a directory: {root}")
    candidates = sorted(p for p in root.iterdir() if p.suffix.lower() == ".png")
    if not candidates:
        return _fail(EXIT_IO, f"no PNG files in {root}")
    ranked = filter_sharp(candidates, args.top)
    if not ranked:
        return _fail(EXIT_IO, f"no scoreable PNG files in {root}")
    for path, score in ranked:
        print(f"{score:.6f}\t{path}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# serve


def cmd_serve(args) -> int:
    if not (1 <= args.port <= 65535):
        return _fail(EXIT_PORT, f"port must be in [1, 65535], got {args.port}")

    import socket

    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    probe.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    try:
        probe.bind((args.host, args.port))
    except OSError as exc:
        return _fail(EXIT_PORT, f"cannot bind {args.host}:{args.port}: {exc}")
    finally:
        probe.close()

    if args.static_dir is not None and not Path(args.static_dir).is_dir():
        return _fail(EXIT_IO, f"static dir not found: {args.static_dir}")
    session_dir = Path(args.session_dir)
    try:
        session_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        return _fail(EXIT_IO, str(exc))

    import uvicorn

    from .service import create_app

    app = create_app(session_dir, static_dir=args.static_dir, ttl_seconds=args.ttl)
    try:
        uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    except (OSError, SystemExit) as exc:
        return _fail(EXIT_PORT, f"server failed to start: {exc}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _add_bounds_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--k-min", type=float, default=_SB.k_min, help="search lower bound")
    p.add_argument("--k-max", type=float, default=_SB.k_max, help="search upper bound")
    p.add_argument(
        "--tol", type=float, default=_SB.tolerance_px, help="bracket width to stop at, px"
    )
    p.add_argument(
        "--coarse", type=int, default=_SB.coarse_samples, help="coarse grid sample count"
    )


def _add_shape_flag(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--shape",
        default="circle",
        help="aperture: circle|triangle|heart|star, or a .json/.png path",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="refocus", description="depth-aware refocusing toolkit"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("render", help="render a refocused image")
    p.add_argument("--image", required=True, help="all-in-focus PNG")
    p.add_argument("--depth", required=True, help="depth map (PFM or PNG16+sidecar)")
    p.add_argument("--focus-x", type=int, default=None, help="focus pixel column")
    p.add_argument("--focus-y", type=int, default=None, help="focus pixel row")
    p.add_argument(
        "--focus-disparity", type=float, default=None, help="focus plane in disparity units"
    )
    p.add_argument("--k", type=float, required=True, help="bokeh level, px per unit disparity")
    _add_shape_flag(p)
    p.add_argument("--tile-size", type=int, default=_RC.tile_size_px)
    p.add_argument("--wrap", action="store_true", help="toroidal edges instead of clamping")
    p.add_argument("--gamma", type=float, default=_RC.highlight_boost_gamma)
    p.add_argument("--out", required=True, help="output PNG path")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("calibrate", help="recover the bokeh level from a reference photo")
    p.add_argument("--aif", required=True, help="all-in-focus PNG")
    p.add_argument("--depth", required=True)
    p.add_argument("--mask", required=True, help="in-focus region mask PNG")
    p.add_argument("--target", required=True, help="reference bokeh PNG")
    _add_bounds_flags(p)
    _add_shape_flag(p)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("datagen", help="append training samples to a manifest")
    routes = p.add_subparsers(dest="route", required=True)

    r = routes.add_parser("synthetic", help="render pairs from clean inputs")
    r.add_argument("--aif", nargs="+", required=True, help="all-in-focus PNGs")
    r.add_argument("--depth", nargs="+", required=True, help="depth maps, paired by position")
    r.add_argument("--out-dir", required=True, help="where rendered samples land")
    r.add_argument("--manifest", required=True, help="JSONL manifest to append to")
    r.add_argument("--seed", type=int, required=True, help="base RNG seed, +1 per pair")
    r.add_argument("--k-min", type=float, default=4.0, help="low end of the K draw")
    r.add_argument("--k-max", type=float, default=40.0, help="high end of the K draw")
    _add_shape_flag(r)
    r.set_defaults(func=cmd_datagen)

    r = routes.add_parser("exif", help="annotate a real photo from lens metadata")
    r.add_argument("--bokeh", required=True, help="the real shallow-depth photo")
    r.add_argument("--exif", required=True, help="file holding its EXIF bytes")
    r.add_argument("--aif", required=True)
    r.add_argument("--depth", required=True)
    r.add_argument("--mask", required=True, help="in-focus region mask PNG")
    r.add_argument("--pixel-ratio", type=float, default=1.0)
    r.add_argument("--manifest", required=True)
    r.set_defaults(func=cmd_datagen)

    r = routes.add_parser("calibrated", help="annotate a real photo by searching K")
    r.add_argument("--bokeh", required=True, help="the real shallow-depth photo")
    r.add_argument("--aif", required=True)
    r.add_argument("--depth", required=True)
    r.add_argument("--mask", required=True)
    _add_bounds_flags(r)
    _add_shape_flag(r)
    r.add_argument("--manifest", required=True)
    r.set_defaults(func=cmd_datagen)

    p = sub.add_parser("sharpness", help="rank a directory of PNGs by sharpness")
    p.add_argument("--dir", required=True)
    p.add_argument("--top", type=int, default=10, help="how many to keep")
    p.set_defaults(func=cmd_sharpness)

    p = sub.add_parser("serve", help="run the HTTP refocusing service")
    p.add_argument("--port", type=int, required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--session-dir", default="sessions", help="created if missing")
    p.add_argument("--static-dir", default=None, help="optional built web UI to serve at /")
    p.add_argument("--ttl", type=float, default=3600.0, help="session idle expiry, seconds")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except SystemExit as exc:
        return int(exc.code or 0)


if __name__ == "__main__":
    sys.exit(main())

#!/usr/bin/env python3
"""Time the compiled scatter core against the pure-Python fallback.

The two backends implement the same splatting loop; this script renders
identical scenes through both and reports wall time plus the speedup,
which is the number that justifies shipping the extension at all.

    python3 benchmarks/bench_scatter.py --size 256 --radii 2 4 8
"""

import argparse
import os
import sys
import time

import numpy as np

from refocus.imagecore import Image
from refocus.optics import DisparityMap, FocusSpec, defocus_map
from refocus.renderer import RenderConfig, active_backend, builtin_shape, render_bokeh


def build_scene(size: int, radius: float):
    rng = np.random.default_rng(99)
    aif = Image(rng.uniform(0.0, 1.0, (size, size, 3)))
    disparity = DisparityMap(rng.uniform(0.0, 1.0, (size, size)), np.ones((size, size), bool))
    # focus placed so the mean splat radius lands near the requested one
    blur = defocus_map(disparity, FocusSpec(0.0, 2.0 * radius))
    return aif, blur, disparity


def time_render(aif, blur, disparity, shape, cfg, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        render_bokeh(aif, blur, disparity, shape, cfg)
        best = min(best, time.perf_counter() - start)
    return best


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--size", type=int, default=256, help="square frame side in px")
    parser.add_argument("--radii", type=float, nargs="+", default=[2.0, 4.0, 8.0])
    parser.add_argument("--repeats", type=int, default=3, help="best-of timing repeats")
    parser.add_argument("--shape", default="circle")
    args = parser.parse_args()

    shape = builtin_shape(args.shape)
    cfg = RenderConfig()

    os.environ["REFOCUS_PURE_PYTHON"] = "0"
    have_compiled = active_backend() == "compiled"
    if not have_compiled:
        print("compiled extension unavailable; timing the fallback only", file=sys.stderr)

    print(f"{'radius':>8} {'python':>12} {'compiled':>12} {'speedup':>9}")
    for radius in args.radii:
        aif, blur, disparity = build_scene(args.size, radius)
        os.environ["REFOCUS_PURE_PYTHON"] = "1"
        t_py = time_render(aif, blur, disparity, shape, cfg, args.repeats)
        row = f"{radius:8.2f} {t_py * 1e3:10.1f}ms"
        if have_compiled:
            os.environ["REFOCUS_PURE_PYTHON"] = "0"
            t_c = time_render(aif, blur, disparity, shape, cfg, args.repeats)
            row += f" {t_c * 1e3:10.1f}ms {t_py / t_c:8.1f}x"
        print(row)
    return 0


if __name__ == "__main__":
    sys.exit(main())

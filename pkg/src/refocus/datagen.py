"""Training-pair manufacturing.

Three routes produce (bokeh, all-in-focus, depth, K, focus) records:

  synthetic        render the bokeh side ourselves from AIF + depth
  real_exif        real bokeh photo; K derived from lens metadata
  real_calibrated  real bokeh photo; K recovered by simulation search

plus a Laplacian-variance sharpness ranking for curating candidate
all-in-focus inputs, and a line-delimited JSON manifest format tying it
all together. Synthetic generation is deterministic in its seed: the
same seed and inputs produce byte-identical output files and records.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .calibration import SearchBounds, calibrate_bokeh_level
from .errors import MissingTag, RefocusError, SchemaViolation
from .exif import TAG_SUBJECT_DISTANCE, parse_exif
from .imagecore import (
    DepthMap,
    GrayMap,
    Image,
    laplacian_variance,
    load_depth,
    load_image,
    luma,
    save_depth,
    save_image,
)
from .optics import (
    FocusSpec,
    bokeh_level_from_exif,
    defocus_map,
    disparity_from_depth,
    focus_disparity_from_mask,
)
from .renderer import ApertureShape, RenderConfig, render_tiled

ROUTES = ("synthetic", "real_exif", "real_calibrated")

# manifest field order is part of the on-disk format
_FIELDS = (
    "bokeh_path",
    "aif_path",
    "depth_path",
    "bokeh_level",
    "focus_disparity",
    "route",
    "shape_name",
    "provenance",
)

# focus planes are drawn from this quantile band of the valid disparity
# values, so they always land on actual scene content
_FOCUS_QUANTILE_BAND = (0.1, 0.9)


@dataclass(frozen=True)
class TrainingSample:
    bokeh_path: str
    aif_path: str
    depth_path: str
    bokeh_level: float
    focus_disparity: float
    route: str
    shape_name: str
    provenance: str

    def __post_init__(self):
        for field in ("bokeh_path", "aif_path", "depth_path"):
            value = getattr(self, field)
            if not isinstance(value, str) or not value:
                raise ValueError(f"{field} must be a non-empty string")
        if not (
            isinstance(self.bokeh_level, float)
            and math.isfinite(self.bokeh_level)
            and self.bokeh_level >= 0.0
        ):
            raise ValueError(f"bokeh_level must be finite and >= 0, got {self.bokeh_level}")
        if not (
            isinstance(self.focus_disparity, float) and 0.0 <= self.focus_disparity <= 1.0
        ):
            raise ValueError(f"focus_disparity must lie in [0, 1], got {self.focus_disparity}")
        if self.route not in ROUTES:
            raise ValueError(f"route must be one of {ROUTES}, got {self.route!r}")
        if not isinstance(self.shape_name, str):
            raise ValueError("shape_name must be a string")
        if not isinstance(self.provenance, str):
            raise ValueError("provenance must be a string")


def _shape_label(shape: ApertureShape) -> str:
    return shape.name or shape.kind


def generate_synthetic_sample(
    aif: Image,
    depth: DepthMap,
    seed: int,
    k_range: tuple,
    shape: ApertureShape,
    cfg: RenderConfig,
    out_dir,
) -> TrainingSample:
    """Render one synthetic training pair and write its three files.

    The focus plane comes from a uniformly drawn quantile of the valid
    disparity values; K is log-uniform over k_range. Files land in
    out_dir/{bokeh,aif,depth}/ named by the seed.
    """
    if not isinstance(seed, int) or seed < 0:
        raise ValueError(f"seed must be a non-negative integer, got {seed!r}")
    lo, hi = float(k_range[0]), float(k_range[1])
    if not (math.isfinite(lo) and math.isfinite(hi) and 0.0 < lo <= hi):
        raise ValueError(f"k_range must satisfy 0 < lo <= hi, got ({lo}, {hi})")

    rng = np.random.default_rng(seed)
    disparity = disparity_from_depth(depth)
    q = float(rng.uniform(*_FOCUS_QUANTILE_BAND))
    focus_disparity = float(np.quantile(disparity.data[disparity.validity], q))
    level = lo if lo == hi else float(np.exp(rng.uniform(np.log(lo), np.log(hi))))

    blur = defocus_map(disparity, FocusSpec(focus_disparity, level))
    bokeh = render_tiled(aif, blur, disparity, shape, cfg)

    sample_id = f"syn_{seed:016x}"
    root = Path(out_dir)
    bokeh_path = root / "bokeh" / f"{sample_id}.png"
    aif_path = root / "aif" / f"{sample_id}.png"
    depth_path = root / "depth" / f"{sample_id}.pfm"
    for p in (bokeh_path, aif_path, depth_path):
        p.parent.mkdir(parents=True, exist_ok=True)
    save_image(bokeh, bokeh_path)
    save_image(aif, aif_path)
    save_depth(depth, depth_path)

    return TrainingSample(
        bokeh_path=str(bokeh_path),
        aif_path=str(aif_path),
        depth_path=str(depth_path),
        bokeh_level=level,
        focus_disparity=focus_disparity,
        route="synthetic",
        shape_name=_shape_label(shape),
        provenance=f"seed={seed} focus_quantile={q!r}",
    )


def annotate_real_exif(
    bokeh_path,
    exif_bytes: bytes,
    aif_path,
    depth_path,
    mask: GrayMap,
    pixel_ratio: float,
    out_dir,
) -> TrainingSample:
    """Record a real bokeh photo whose K comes from lens metadata.

    Nothing is re-rendered or copied; the record references the input
    files where they already live. The all-in-focus side is externally
    supplied, which the provenance marks so consumers know the
    supervision is approximate.
    """
    for p in (bokeh_path, aif_path, depth_path):
        if not Path(p).exists():
            raise FileNotFoundError(str(p))
    meta = parse_exif(exif_bytes)
    if meta.focus_distance_mm is None:
        raise MissingTag(TAG_SUBJECT_DISTANCE)
    level = bokeh_level_from_exif(meta, pixel_ratio)
    disparity = disparity_from_depth(load_depth(depth_path))
    focus_disparity = focus_disparity_from_mask(disparity, mask)
    distance = meta.focus_distance_mm
    return TrainingSample(
        bokeh_path=str(bokeh_path),
        aif_path=str(aif_path),
        depth_path=str(depth_path),
        bokeh_level=level,
        focus_disparity=focus_disparity,
        route="real_exif",
        shape_name="circle",
        provenance=(
            f"external_aif f={meta.focal_length_mm}mm F={meta.f_number} S1={distance}mm"
        ),
    )


def calibrate_real_pair(
    aif_path,
    depth_path,
    mask: GrayMap,
    real_bokeh_path,
    bounds: SearchBounds,
    shape: ApertureShape,
    cfg: RenderConfig,
    out_dir,
) -> TrainingSample:
    """Record a real bokeh photo whose K is recovered by search.

    The focus plane is the mask's disparity median (same rule as the
    metadata route), then the calibrator finds the K whose simulated
    render best matches the photo.
    """
    aif = load_image(aif_path)
    target = load_image(real_bokeh_path)
    disparity = disparity_from_depth(load_depth(depth_path))
    focus_disparity = focus_disparity_from_mask(disparity, mask)
    result = calibrate_bokeh_level(aif, disparity, focus_disparity, target, shape, bounds, cfg)
    return TrainingSample(
        bokeh_path=str(real_bokeh_path),
        aif_path=str(aif_path),
        depth_path=str(depth_path),
        bokeh_level=result.k_star,
        focus_disparity=focus_disparity,
        route="real_calibrated",
        shape_name=_shape_label(shape),
        provenance=f"ssim={result.ssim_at_k_star!r} iterations={result.iterations}",
    )


def filter_sharp(image_paths, top_n: int):
    """Rank images by Laplacian variance and keep the sharpest top_n.

    Unreadable or unscoreable entries are skipped with a warning. Ties
    break lexicographically by path so the output is deterministic.
    """
    if top_n < 1:
        raise ValueError(f"top_n must be >= 1, got {top_n}")
    scored = []
    for p in image_paths:
        try:
            score = laplacian_variance(luma(load_image(p)))
        except (OSError, RefocusError) as exc:
            warnings.warn(f"skipping {p}: {exc}", RuntimeWarning, stacklevel=2)
            continue
        scored.append((p, score))
    scored.sort(key=lambda item: (-item[1], str(item[0])))
    return scored[:top_n]


def _manifest_lines(samples) -> str:
    lines = []
    for line_no, sample in enumerate(samples, start=1):
        for p in (sample.bokeh_path, sample.aif_path, sample.depth_path):
            if not Path(p).exists():
                raise FileNotFoundError(f"manifest line {line_no} references missing file {p}")
        record = {name: getattr(sample, name) for name in _FIELDS}
        lines.append(json.dumps(record, ensure_ascii=False))
    return "".join(line + "\n" for line in lines)


def write_manifest(samples, path) -> None:
    Path(path).write_text(_manifest_lines(samples), encoding="utf-8")


def append_manifest(samples, path) -> None:
    """Add records to an existing manifest (or start one) without
    re-validating the lines already there."""
    text = _manifest_lines(samples)
    with open(path, "a", encoding="utf-8") as fh:
        fh.write(text)


def read_manifest(path, check_files: bool = True):
    """Parse a manifest back into samples, validating each line.

    Set check_files=False to accept records whose files have moved
    (useful for inspecting a manifest copied away from its data)."""
    text = Path(path).read_text(encoding="utf-8")
    samples = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            raw = json.loads(line)
        except json.JSONDecodeError as exc:
            raise SchemaViolation(line_no, f"not valid JSON: {exc}") from exc
        if not isinstance(raw, dict):
            raise SchemaViolation(line_no, "record must be a JSON object")
        if set(raw) != set(_FIELDS):
            missing = set(_FIELDS) - set(raw)
            extra = set(raw) - set(_FIELDS)
            raise SchemaViolation(line_no, f"field mismatch: missing={missing} extra={extra}")
        for key in ("bokeh_level", "focus_disparity"):
            if isinstance(raw[key], bool) or not isinstance(raw[key], (int, float)):
                raise SchemaViolation(line_no, f"{key} must be a number")
            raw[key] = float(raw[key])
        try:
            sample = TrainingSample(**raw)
        except ValueError as exc:
            raise SchemaViolation(line_no, str(exc)) from exc
        if check_files:
            for p in (sample.bokeh_path, sample.aif_path, sample.depth_path):
                if not Path(p).exists():
                    raise SchemaViolation(line_no, f"referenced file does not exist: {p}")
        samples.append(sample)
    return samples

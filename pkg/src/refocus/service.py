"""HTTP facade for interactive refocusing sessions.

A session is an uploaded all-in-focus image plus the disparity derived
from its depth map. Assets are written to a session directory at upload
time and every request path reads back through that on-disk form, so a
restarted server replays renders byte-for-byte. Sessions expire after
an idle TTL. Rendering is pure and may run concurrently; calibration is
serialized per session (a second concurrent request gets 409).
"""

from __future__ import annotations

import base64
import json
import os
import threading
import time
import uuid
from pathlib import Path

import cv2
import numpy as np
from fastapi import FastAPI, File, UploadFile
from fastapi.responses import JSONResponse, Response

from .calibration import SearchBounds, calibrate_bokeh_level, downscale_for_metric
from .errors import RefocusError
from .imagecore import GrayMap, Image, srgb_decode, srgb_encode
from .optics import (
    DisparityMap,
    FocusSpec,
    defocus_map,
    disparity_from_depth,
    focus_disparity_at,
    focus_disparity_from_mask,
)
from .renderer import (
    ApertureShape,
    BUILTIN_SHAPE_NAMES,
    RenderConfig,
    builtin_shape,
    rasterize_kernel,
    render_tiled,
)

MAX_UPLOAD_BYTES = 64 * 2**20
PREVIEW_MAX_SIDE = 768
DEFAULT_TTL_SECONDS = 3600.0

_THUMB_RADIUS = 22.0


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"code": code, "message": message})


def _encode_png16(img: Image) -> bytes:
    """sRGB PNG bytes, 16 bits per channel, same transform as save_image."""
    encoded = srgb_encode(np.clip(img.data, 0.0, 1.0))
    scaled = np.round(encoded * 65535.0).astype(np.uint16)
    ok, buf = cv2.imencode(".png", scaled[:, :, ::-1])
    if not ok:
        raise RuntimeError("PNG encoding failed")
    return buf.tobytes()


def _encode_gray8(data: np.ndarray) -> bytes:
    scaled = np.round(np.clip(data, 0.0, 1.0) * 255.0).astype(np.uint8)
    ok, buf = cv2.imencode(".png", scaled)
    if not ok:
        raise RuntimeError("PNG encoding failed")
    return buf.tobytes()


def _decode_image_bytes(raw: bytes) -> Image:
    flat = cv2.imdecode(np.frombuffer(raw, np.uint8), cv2.IMREAD_UNCHANGED)
    if flat is None:
        raise ValueError("undecodable image payload")
    if flat.ndim != 3 or flat.shape[2] < 3:
        raise ValueError("expected a color image")
    scale = 65535.0 if flat.dtype == np.uint16 else 255.0
    rgb = flat[:, :, :3][:, :, ::-1].astype(np.float64) / scale
    return Image(srgb_decode(rgb))


def _decode_gray_bytes(raw: bytes) -> GrayMap:
    flat = cv2.imdecode(np.frombuffer(raw, np.uint8), cv2.IMREAD_UNCHANGED)
    if flat is None:
        raise ValueError("undecodable grayscale payload")
    if flat.ndim == 3:
        flat = flat[:, :, : min(3, flat.shape[2])].mean(axis=2)
    scale = 65535.0 if flat.dtype == np.uint16 else 255.0
    return GrayMap(flat.astype(np.float64) / scale)


class _Session:
    __slots__ = ("sid", "aif", "disparity", "last_render_params")

    def __init__(self, sid: str, aif: Image, disparity: DisparityMap):
        self.sid = sid
        self.aif = aif
        self.disparity = disparity
        self.last_render_params = None


class SessionRegistry:
    """Disk-backed session store with an in-memory cache.

    The on-disk form (float32 arrays) is authoritative: uploads are
    immediately round-tripped through it so a render before a restart
    and the same render after load identical inputs.
    """

    def __init__(self, root: Path, ttl_seconds: float):
        self.root = Path(root)
        self.ttl = ttl_seconds
        self.root.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._cache: dict = {}
        self._calibrations: dict = {}

    def _dir(self, sid: str) -> Path:
        return self.root / sid

    def create(self, aif: Image, disparity: DisparityMap) -> str:
        sid = uuid.uuid4().hex
        d = self._dir(sid)
        d.mkdir(parents=True)
        np.save(d / "aif.npy", aif.data.astype(np.float32))
        np.save(d / "disparity.npy", disparity.data.astype(np.float32))
        np.save(d / "validity.npy", disparity.validity)
        meta = {
            "width": int(aif.data.shape[1]),
            "height": int(aif.data.shape[0]),
            "created_at": time.time(),
        }
        (d / "meta.json").write_text(json.dumps(meta), encoding="utf-8")
        return sid

    def _load(self, sid: str) -> _Session:
        d = self._dir(sid)
        aif = Image(np.load(d / "aif.npy").astype(np.float64))
        disparity = DisparityMap(
            np.load(d / "disparity.npy").astype(np.float64), np.load(d / "validity.npy")
        )
        return _Session(sid, aif, disparity)

    def get(self, sid: str):
        """The session, or None when unknown or idle past the TTL."""
        if not sid or "/" in sid or "\\" in sid or "." in sid:
            return None
        meta = self._dir(sid) / "meta.json"
        with self._lock:
            try:
                idle = time.time() - meta.stat().st_mtime
            except OSError:
                return None
            if idle > self.ttl:
                self._cache.pop(sid, None)
                self._calibrations.pop(sid, None)
                return None
            session = self._cache.get(sid)
            if session is None:
                session = self._load(sid)
                self._cache[sid] = session
        # touching outside the lock is fine: worst case two touches race
        os.utime(meta)
        return session

    def calibration_lock(self, sid: str) -> threading.Lock:
        with self._lock:
            lock = self._calibrations.get(sid)
            if lock is None:
                lock = self._calibrations[sid] = threading.Lock()
            return lock


def _resolve_shape(spec) -> ApertureShape:
    if isinstance(spec, str):
        if spec in BUILTIN_SHAPE_NAMES:
            return builtin_shape(spec)
        raise ValueError(f"unknown shape {spec!r}")
    if isinstance(spec, dict) and "vertices" in spec:
        return ApertureShape("polygon", np.asarray(spec["vertices"], np.float64), name="custom")
    raise ValueError("shape must be a builtin name or {'vertices': [[x, y], ...]}")


def _shape_thumbnails() -> list:
    entries = []
    for name in BUILTIN_SHAPE_NAMES:
        kernel = rasterize_kernel(builtin_shape(name), _THUMB_RADIUS)
        weights = kernel.weights
        top = weights.max()
        png = _encode_gray8(weights / top if top > 0 else weights)
        entries.append({"name": name, "thumbnail_png": base64.b64encode(png).decode("ascii")})
    return entries


def _preview_pair(session: _Session):
    """Session assets at preview resolution plus the K scale factor."""
    h, w = session.aif.data.shape[:2]
    longest = max(h, w)
    if longest <= PREVIEW_MAX_SIDE:
        return session.aif, session.disparity, 1.0
    small = downscale_for_metric(session.aif, PREVIEW_MAX_SIDE)
    nh, nw = small.data.shape[:2]
    data = cv2.resize(session.disparity.data, (nw, nh), interpolation=cv2.INTER_AREA)
    valid = (
        cv2.resize(
            session.disparity.validity.astype(np.float64), (nw, nh),
            interpolation=cv2.INTER_AREA,
        )
        > 0.5
    )
    disparity = DisparityMap(np.clip(data, 0.0, 1.0), valid)
    return small, disparity, max(nh, nw) / longest


def create_app(
    session_dir,
    static_dir=None,
    ttl_seconds: float = DEFAULT_TTL_SECONDS,
) -> FastAPI:
    registry = SessionRegistry(Path(session_dir), ttl_seconds)
    app = FastAPI(title="refocus", docs_url=None, redoc_url=None)
    app.state.registry = registry
    app.state.shapes = _shape_thumbnails()

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.get("/api/shapes")
    def shapes():
        return app.state.shapes

    @app.post("/api/upload")
    async def upload(
        image: UploadFile = File(...),
        depth: UploadFile = File(...),
        depth_sidecar: UploadFile | None = File(None),
    ):
        image_bytes = await image.read()
        depth_bytes = await depth.read()
        sidecar_bytes = await depth_sidecar.read() if depth_sidecar is not None else b""
        total = len(image_bytes) + len(depth_bytes) + len(sidecar_bytes)
        if total > MAX_UPLOAD_BYTES:
            return _error(413, "too_large", f"payload {total} exceeds {MAX_UPLOAD_BYTES} bytes")
        try:
            aif = _decode_image_bytes(image_bytes)
        except ValueError as exc:
            return _error(400, "bad_image", str(exc))
        try:
            depth_map = _parse_depth_upload(depth_bytes, sidecar_bytes, depth.filename or "")
        except (ValueError, RefocusError) as exc:
            return _error(400, "bad_depth", str(exc))
        if depth_map.data.shape != aif.data.shape[:2]:
            return _error(
                400, "dim_mismatch",
                f"image {aif.data.shape[:2]} vs depth {depth_map.data.shape}",
            )
        disparity = disparity_from_depth(depth_map)
        sid = registry.create(aif, disparity)
        preview = base64.b64encode(_encode_gray8(disparity.data)).decode("ascii")
        return {
            "session_id": sid,
            "width": int(aif.data.shape[1]),
            "height": int(aif.data.shape[0]),
            "disparity_preview_png": preview,
        }

    @app.post("/api/render")
    async def render(body: dict):
        session, err = _session_or_error(body)
        if err is not None:
            return err
        try:
            k = float(body.get("k"))
            preview = bool(body.get("preview", True))
            shape = _resolve_shape(body.get("shape", "circle"))
            wants = body.get("focus")
            focus = _resolve_focus(session, wants)
            if not (np.isfinite(k) and k >= 0.0):
                raise ValueError(f"k must be finite and >= 0, got {k}")
        except (TypeError, ValueError, RefocusError) as exc:
            return _error(422, "invalid_params", str(exc))

        if preview:
            aif, disparity, factor = _preview_pair(session)
        else:
            aif, disparity, factor = session.aif, session.disparity, 1.0
        cfg = RenderConfig()
        blur = defocus_map(disparity, FocusSpec(focus, k * factor))
        out = render_tiled(aif, blur, disparity, shape, cfg)
        session.last_render_params = (focus, k, getattr(shape, "name", "") or shape.kind)
        return Response(
            content=_encode_png16(out),
            media_type="image/png",
            headers={"X-Focus-Disparity": repr(focus)},
        )

    @app.post("/api/calibrate")
    async def calibrate(body: dict):
        session, err = _session_or_error(body)
        if err is not None:
            return err
        try:
            target = _decode_image_bytes(base64.b64decode(body["target"]))
            mask = _decode_gray_bytes(base64.b64decode(body["mask"]))
            raw_bounds = body.get("bounds") or {}
            bounds = SearchBounds(
                k_min=float(raw_bounds.get("k_min", 0.0)),
                k_max=float(raw_bounds.get("k_max", 64.0)),
                tolerance_px=float(raw_bounds.get("tolerance_px", 0.25)),
                coarse_samples=int(raw_bounds.get("coarse_samples", 8)),
            )
        except (KeyError, TypeError, ValueError, RefocusError) as exc:
            return _error(422, "invalid_params", str(exc))
        if target.data.shape != session.aif.data.shape:
            return _error(
                422, "dim_mismatch",
                f"target {target.data.shape} vs session {session.aif.data.shape}",
            )

        lock = registry.calibration_lock(session.sid)
        if not lock.acquire(blocking=False):
            return _error(409, "calibration_running", "a calibration is already in flight")
        try:
            focus = focus_disparity_from_mask(session.disparity, mask)
            result = calibrate_bokeh_level(
                session.aif, session.disparity, focus, target,
                builtin_shape("circle"), bounds, RenderConfig(),
            )
        except (RefocusError, ValueError) as exc:
            return _error(422, "calibration_failed", str(exc))
        finally:
            lock.release()
        return {
            "k_star": result.k_star,
            "ssim": result.ssim_at_k_star,
            "iterations": result.iterations,
            "trace": [[k, s] for k, s in result.trace],
        }

    def _session_or_error(body: dict):
        sid = body.get("session_id")
        if not isinstance(sid, str):
            return None, _error(422, "invalid_params", "session_id must be a string")
        session = registry.get(sid)
        if session is None:
            return None, _error(404, "unknown_session", f"no session {sid!r}")
        return session, None

    def _resolve_focus(session: _Session, wants) -> float:
        if not isinstance(wants, dict):
            raise ValueError("focus must be {'x':..,'y':..} or {'disparity':..}")
        if "disparity" in wants:
            value = float(wants["disparity"])
            if not (0.0 <= value <= 1.0):
                raise ValueError(f"focus disparity must lie in [0, 1], got {value}")
            return value
        if "x" in wants and "y" in wants:
            return focus_disparity_at(session.disparity, int(wants["x"]), int(wants["y"]))
        raise ValueError("focus needs either disparity or both x and y")

    if static_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")

    return app


def _parse_depth_upload(raw: bytes, sidecar: bytes, filename: str):
    """Depth payloads arrive either as PFM bytes or 16-bit PNG + JSON
    sidecar carrying meters_per_unit."""
    from .imagecore import DepthMap, _parse_pfm

    if raw[:2] in (b"Pf", b"PF"):
        plane = _parse_pfm(raw, filename or "upload")
        with np.errstate(invalid="ignore"):
            finite = np.isfinite(plane) & (plane > 0.0)
        return DepthMap(np.where(finite, plane, 0.0), finite)
    flat = cv2.imdecode(np.frombuffer(raw, np.uint8), cv2.IMREAD_UNCHANGED)
    if flat is None or flat.ndim != 2 or flat.dtype != np.uint16:
        raise ValueError("depth must be PFM or single-channel 16-bit PNG")
    if not sidecar:
        raise ValueError("16-bit PNG depth needs a JSON sidecar with meters_per_unit")
    try:
        scale = float(json.loads(sidecar.decode("utf-8"))["meters_per_unit"])
    except (UnicodeDecodeError, json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ValueError(f"bad depth sidecar: {exc}") from exc
    data = flat.astype(np.float64) * scale
    finite = data > 0.0
    return DepthMap(np.where(finite, data, 0.0), finite)

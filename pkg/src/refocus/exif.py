"""Minimal EXIF reader: just the lens tags the thin-lens model needs.

Accepts an APP1 payload (``Exif\\0\\0`` + TIFF), a bare TIFF blob, or a whole
JPEG stream (the APP1 segment is located by marker walking). Everything else
in the file is skipped by offset arithmetic; no third-party EXIF dependency.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

from .errors import DegenerateFocus, MalformedIfd, MissingTag, NotExif

TAG_F_NUMBER = 0x829D
TAG_EXIF_IFD = 0x8769
TAG_SUBJECT_DISTANCE = 0x9206
TAG_FOCAL_LENGTH = 0x920A
TAG_FOCAL_PLANE_X_RES = 0xA20E
TAG_FOCAL_PLANE_UNIT = 0xA210

_WANTED = {
    TAG_F_NUMBER,
    TAG_EXIF_IFD,
    TAG_SUBJECT_DISTANCE,
    TAG_FOCAL_LENGTH,
    TAG_FOCAL_PLANE_X_RES,
    TAG_FOCAL_PLANE_UNIT,
}

# TIFF field types we interpret: SHORT, LONG, RATIONAL, SRATIONAL
_TYPE_SIZES = {3: 2, 4: 4, 5: 8, 10: 8}

_UNIT_NAMES = {2: "inch", 3: "cm", 4: "mm"}


@dataclass(frozen=True)
class LensMeta:
    """Lens parameters extracted from EXIF.

    focus_distance_mm is math.inf for the EXIF infinity marker and None when
    SubjectDistance is absent or recorded as unknown (0). Construction
    raises DegenerateFocus when a finite focus distance does not exceed the
    focal length, because the thin-lens formulas divide by S1 - f.
    """

    focal_length_mm: float
    f_number: float
    focus_distance_mm: float | None = None
    focal_plane_x_resolution: float | None = None
    focal_plane_unit: str | None = None

    def __post_init__(self):
        if not (math.isfinite(self.focal_length_mm) and self.focal_length_mm > 0):
            raise ValueError("focal_length_mm must be finite and > 0")
        if not (math.isfinite(self.f_number) and self.f_number > 0):
            raise ValueError("f_number must be finite and > 0")
        s1 = self.focus_distance_mm
        if s1 is not None:
            if math.isnan(s1) or s1 <= 0:
                raise ValueError("focus_distance_mm must be > 0")
            if math.isfinite(s1) and s1 <= self.focal_length_mm:
                raise DegenerateFocus(
                    f"focus distance {s1} mm <= focal length {self.focal_length_mm} mm"
                )
        r = self.focal_plane_x_resolution
        if r is not None and not (math.isfinite(r) and r > 0):
            raise ValueError("focal_plane_x_resolution must be finite and > 0")


class _Ifd:
    """Bounds-checked little window over one TIFF byte buffer."""

    def __init__(self, buf: bytes):
        if len(buf) < 8:
            raise NotExif("buffer shorter than a TIFF header")
        if buf[:4] == b"II\x2a\x00":
            self.bo = "<"
        elif buf[:4] == b"MM\x00\x2a":
            self.bo = ">"
        else:
            raise NotExif("no TIFF byte-order mark")
        self.buf = buf

    def _slice(self, offset: int, size: int) -> bytes:
        if offset < 0 or size < 0 or offset + size > len(self.buf):
            raise MalformedIfd(f"read of {size} bytes at {offset} leaves the buffer")
        return self.buf[offset : offset + size]

    def u16(self, offset: int) -> int:
        return struct.unpack(self.bo + "H", self._slice(offset, 2))[0]

    def u32(self, offset: int) -> int:
        return struct.unpack(self.bo + "I", self._slice(offset, 4))[0]

    def entries(self, ifd_offset: int) -> dict[int, tuple[int, int, bytes]]:
        """tag -> (type, count, 4-byte value field) for the tags we care about."""
        n = self.u16(ifd_offset)
        found = {}
        for i in range(n):
            base = ifd_offset + 2 + 12 * i
            raw = self._slice(base, 12)
            tag, ftype, count = struct.unpack(self.bo + "HHI", raw[:8])
            if tag in _WANTED:
                found[tag] = (ftype, count, raw[8:12])
        return found

    def rational(self, entry: tuple[int, int, bytes]) -> tuple[int, int]:
        ftype, count, field = entry
        if ftype not in (5, 10) or count < 1:
            raise MalformedIfd(f"expected a rational field, got type {ftype}")
        offset = struct.unpack(self.bo + "I", field)[0]
        kind = "II" if ftype == 5 else "ii"
        return struct.unpack(self.bo + kind, self._slice(offset, 8))

    def scalar(self, entry: tuple[int, int, bytes]) -> int:
        ftype, count, field = entry
        size = _TYPE_SIZES.get(ftype)
        if size is None or size > 4 or count < 1:
            raise MalformedIfd(f"expected an inline scalar, got type {ftype}")
        # short values sit left-justified inside the 4-byte field
        code = "H" if ftype == 3 else "I"
        return struct.unpack(self.bo + code, field[:size])[0]


def _rational_value(ifd: _Ifd, entry) -> float:
    num, den = ifd.rational(entry)
    if den == 0:
        raise MalformedIfd("rational with zero denominator")
    return num / den


def _strip_jpeg(data: bytes) -> bytes:
    """Return the APP1 Exif payload of a JPEG stream."""
    pos = 2
    while pos + 4 <= len(data):
        if data[pos] != 0xFF:
            break
        marker = data[pos + 1]
        if marker == 0xD9 or marker == 0xDA:  # EOI / start of scan
            break
        seg_len = struct.unpack(">H", data[pos + 2 : pos + 4])[0]
        if seg_len < 2:
            break
        if marker == 0xE1 and data[pos + 4 : pos + 10] == b"Exif\x00\x00":
            return data[pos + 4 : pos + 2 + seg_len]
        pos += 2 + seg_len
    raise NotExif("JPEG stream carries no Exif APP1 segment")


def parse_exif(data: bytes) -> LensMeta:
    """Extract FocalLength, FNumber, SubjectDistance and the focal-plane
    resolution pair from an EXIF byte buffer.

    Raises NotExif when the buffer is not an EXIF container at all,
    MissingTag when FocalLength or FNumber is absent, and MalformedIfd on
    broken structure. SubjectDistance is optional here; consumers that need
    S1 fail with their own error when it is None.
    """
    if data[:2] == b"\xff\xd8":
        data = _strip_jpeg(data)
    if data[:6] == b"Exif\x00\x00":
        data = data[6:]
    ifd = _Ifd(bytes(data))

    tags = ifd.entries(ifd.u32(4))
    if TAG_EXIF_IFD in tags:
        sub = ifd.entries(ifd.scalar(tags[TAG_EXIF_IFD]))
        tags.update(sub)

    if TAG_FOCAL_LENGTH not in tags:
        raise MissingTag(TAG_FOCAL_LENGTH)
    if TAG_F_NUMBER not in tags:
        raise MissingTag(TAG_F_NUMBER)

    focal_length = _rational_value(ifd, tags[TAG_FOCAL_LENGTH])
    f_number = _rational_value(ifd, tags[TAG_F_NUMBER])

    focus_mm: float | None = None
    if TAG_SUBJECT_DISTANCE in tags:
        num, den = ifd.rational(tags[TAG_SUBJECT_DISTANCE])
        if den == 0:
            raise MalformedIfd("SubjectDistance with zero denominator")
        if num == 0xFFFFFFFF and den == 1:
            focus_mm = math.inf  # EXIF infinity marker
        elif num != 0:  # 0 means "unknown" per the EXIF note on this tag
            focus_mm = 1000.0 * num / den  # stored in meters

    plane_res: float | None = None
    if TAG_FOCAL_PLANE_X_RES in tags:
        plane_res = _rational_value(ifd, tags[TAG_FOCAL_PLANE_X_RES])

    unit: str | None = None
    if TAG_FOCAL_PLANE_UNIT in tags:
        unit = _UNIT_NAMES.get(ifd.scalar(tags[TAG_FOCAL_PLANE_UNIT]))

    try:
        return LensMeta(
            focal_length_mm=focal_length,
            f_number=f_number,
            focus_distance_mm=focus_mm,
            focal_plane_x_resolution=plane_res,
            focal_plane_unit=unit,
        )
    except ValueError as exc:
        raise MalformedIfd(str(exc)) from exc


__all__ = [
    "LensMeta",
    "parse_exif",
    "TAG_F_NUMBER",
    "TAG_EXIF_IFD",
    "TAG_SUBJECT_DISTANCE",
    "TAG_FOCAL_LENGTH",
    "TAG_FOCAL_PLANE_X_RES",
    "TAG_FOCAL_PLANE_UNIT",
]

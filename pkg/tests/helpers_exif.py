"""Hand-rolled TIFF/EXIF fixture builder shared by the parser and data
pipeline tests. This is the oracle side: it writes IFD structures straight
from the TIFF byte layout rules, sharing no code with the implementation."""

import struct

from refocus.exif import (
    TAG_F_NUMBER,
    TAG_FOCAL_LENGTH,
    TAG_FOCAL_PLANE_UNIT,
    TAG_FOCAL_PLANE_X_RES,
    TAG_SUBJECT_DISTANCE,
)


def build_tiff(bo, exif_tags, ifd0_tags=(), exif_pointer=True):
    """exif_tags / ifd0_tags: iterables of (tag, kind, value) where kind is
    'rat' (value = (num, den)) or 'short' (value = int)."""
    ifd0 = list(ifd0_tags)
    sub = list(exif_tags)
    n0 = len(ifd0) + (1 if exif_pointer else 0)
    ifd0_off = 8
    ifd0_size = 2 + 12 * n0 + 4
    sub_off = ifd0_off + ifd0_size
    sub_size = (2 + 12 * len(sub) + 4) if exif_pointer else 0
    payload_off = sub_off + sub_size

    payload = bytearray()

    def entry(tag, kind, value):
        nonlocal payload
        if kind == "rat":
            field = struct.pack(bo + "I", payload_off + len(payload))
            payload += struct.pack(bo + "II", *value)
            return struct.pack(bo + "HHI", tag, 5, 1) + field
        if kind == "short":
            return struct.pack(bo + "HHI", tag, 3, 1) + struct.pack(bo + "H", value) + b"\x00\x00"
        raise AssertionError(kind)

    blocks = []
    ifd0_entries = [entry(t, k, v) for t, k, v in ifd0]
    if exif_pointer:
        ifd0_entries.append(
            struct.pack(bo + "HHI", 0x8769, 4, 1) + struct.pack(bo + "I", sub_off)
        )
    blocks.append(struct.pack(bo + "H", n0) + b"".join(ifd0_entries) + b"\x00" * 4)
    if exif_pointer:
        sub_entries = [entry(t, k, v) for t, k, v in sub]
        blocks.append(struct.pack(bo + "H", len(sub)) + b"".join(sub_entries) + b"\x00" * 4)

    magic = b"II\x2a\x00" if bo == "<" else b"MM\x00\x2a"
    header = magic + struct.pack(bo + "I", ifd0_off)
    return header + b"".join(blocks) + bytes(payload)


def lens_fixture(
    bo="<",
    focal=(50, 1),
    fnum=(18, 10),
    dist=(2, 1),
    plane=None,
    unit=None,
    prefix=b"Exif\x00\x00",
):
    tags = []
    if fnum is not None:
        tags.append((TAG_F_NUMBER, "rat", fnum))
    if dist is not None:
        tags.append((TAG_SUBJECT_DISTANCE, "rat", dist))
    if focal is not None:
        tags.append((TAG_FOCAL_LENGTH, "rat", focal))
    if plane is not None:
        tags.append((TAG_FOCAL_PLANE_X_RES, "rat", plane))
    if unit is not None:
        tags.append((TAG_FOCAL_PLANE_UNIT, "short", unit))
    return prefix + build_tiff(bo, tags)

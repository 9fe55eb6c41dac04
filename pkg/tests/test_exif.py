import math
import struct

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from refocus.errors import DegenerateFocus, MalformedIfd, MissingTag, NotExif, RefocusError
from helpers_exif import build_tiff, lens_fixture
from refocus.exif import (
    LensMeta,
    TAG_F_NUMBER,
    TAG_FOCAL_LENGTH,
    TAG_FOCAL_PLANE_UNIT,
    TAG_FOCAL_PLANE_X_RES,
    TAG_SUBJECT_DISTANCE,
    parse_exif,
)

class TestParse:
    def test_little_endian_fixture(self):
        meta = parse_exif(lens_fixture("<"))
        assert meta.focal_length_mm == 50.0
        assert meta.f_number == pytest.approx(1.8)
        assert meta.focus_distance_mm == 2000.0  # 2 m in EXIF -> mm

    def test_big_endian_equals_little_endian(self):
        assert parse_exif(lens_fixture("<")) == parse_exif(lens_fixture(">"))

    def test_bare_tiff_without_app1_prefix(self):
        meta = parse_exif(lens_fixture("<", prefix=b""))
        assert meta.focal_length_mm == 50.0

    def test_jpeg_stream(self):
        app1_body = lens_fixture("<")
        app1 = b"\xff\xe1" + struct.pack(">H", len(app1_body) + 2) + app1_body
        app0 = b"\xff\xe0" + struct.pack(">H", 4) + b"\x00\x00"
        jpeg = b"\xff\xd8" + app0 + app1 + b"\xff\xd9"
        assert parse_exif(jpeg).f_number == pytest.approx(1.8)

    def test_tags_in_ifd0_directly(self):
        tags = [
            (TAG_F_NUMBER, "rat", (4, 1)),
            (TAG_FOCAL_LENGTH, "rat", (85, 1)),
        ]
        meta = parse_exif(build_tiff("<", [], ifd0_tags=tags, exif_pointer=False))
        assert meta.focal_length_mm == 85.0
        assert meta.focus_distance_mm is None

    def test_missing_f_number(self):
        with pytest.raises(MissingTag) as exc:
            parse_exif(lens_fixture("<", fnum=None))
        assert exc.value.tag == 0x829D

    def test_missing_focal_length(self):
        with pytest.raises(MissingTag) as exc:
            parse_exif(lens_fixture("<", focal=None))
        assert exc.value.tag == 0x920A

    def test_missing_subject_distance_is_none(self):
        meta = parse_exif(lens_fixture("<", dist=None))
        assert meta.focus_distance_mm is None

    def test_infinity_marker(self):
        meta = parse_exif(lens_fixture("<", dist=(0xFFFFFFFF, 1)))
        assert meta.focus_distance_mm == math.inf

    def test_unknown_distance_zero_is_none(self):
        meta = parse_exif(lens_fixture("<", dist=(0, 1)))
        assert meta.focus_distance_mm is None

    def test_focal_plane_fields(self):
        meta = parse_exif(lens_fixture("<", plane=(7000, 1), unit=2))
        assert meta.focal_plane_x_resolution == 7000.0
        assert meta.focal_plane_unit == "inch"

    def test_unit_codes(self):
        assert parse_exif(lens_fixture("<", unit=3)).focal_plane_unit == "cm"
        assert parse_exif(lens_fixture("<", unit=4)).focal_plane_unit == "mm"
        assert parse_exif(lens_fixture("<", unit=9)).focal_plane_unit is None

    def test_zero_denominator(self):
        with pytest.raises(MalformedIfd):
            parse_exif(lens_fixture("<", focal=(50, 0)))

    def test_focus_closer_than_focal_length(self):
        # 0.03 m = 30 mm < 50 mm focal length: thin lens breaks down
        with pytest.raises(DegenerateFocus):
            parse_exif(lens_fixture("<", dist=(3, 100)))

    def test_not_exif(self):
        with pytest.raises(NotExif):
            parse_exif(b"hello world, nothing to see")

    def test_empty_buffer(self):
        with pytest.raises(NotExif):
            parse_exif(b"")

    def test_truncated_payload(self):
        data = lens_fixture("<")
        with pytest.raises(MalformedIfd):
            parse_exif(data[:-6])  # chop into the rational payload area

    def test_ifd_offset_out_of_bounds(self):
        magic = b"II\x2a\x00" + struct.pack("<I", 10_000)
        with pytest.raises(MalformedIfd):
            parse_exif(magic + b"\x00" * 8)


class TestByteOrderInvariance:
    @given(
        f=st.tuples(st.integers(1, 10_000), st.integers(1, 100)),
        n=st.tuples(st.integers(1, 640), st.integers(1, 100)),
        d_num=st.integers(1, 10_000),
    )
    @settings(max_examples=50, deadline=None)
    def test_equal_fixtures_parse_equal(self, f, n, d_num):
        d = (d_num, 1)
        try:
            le = parse_exif(lens_fixture("<", focal=f, fnum=n, dist=d))
        except DegenerateFocus:
            le = None
        try:
            be = parse_exif(lens_fixture(">", focal=f, fnum=n, dist=d))
        except DegenerateFocus:
            be = None
        assert le == be


class TestFuzz:
    def test_random_buffers_never_crash(self):
        """Arbitrary bytes must yield a LensMeta or a declared error."""
        import numpy as np

        rng = np.random.default_rng(1234)
        base = lens_fixture("<")
        for i in range(2000):
            mode = i % 3
            if mode == 0:
                buf = rng.bytes(rng.integers(0, 200))
            elif mode == 1:
                buf = b"II\x2a\x00" + rng.bytes(rng.integers(0, 120))
            else:
                mutated = bytearray(base)
                for _ in range(rng.integers(1, 6)):
                    mutated[rng.integers(0, len(mutated))] = rng.integers(0, 256)
                buf = bytes(mutated)
            try:
                meta = parse_exif(buf)
                assert isinstance(meta, LensMeta)
            except (NotExif, MissingTag, MalformedIfd, DegenerateFocus):
                pass  # declared outcomes

    def test_fuzz_never_raises_undeclared(self):
        import numpy as np

        rng = np.random.default_rng(77)
        for _ in range(500):
            buf = b"Exif\x00\x00" + rng.bytes(rng.integers(8, 64))
            try:
                parse_exif(buf)
            except RefocusError:
                pass

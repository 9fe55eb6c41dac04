"""Exception taxonomy shared across the package.

Plain I/O failures reuse the builtins (FileNotFoundError, OSError); everything
domain-specific derives from RefocusError so callers can catch one base class.
"""


class RefocusError(Exception):
    pass


class UnsupportedFormat(RefocusError):
    """File exists but is not a format we read."""


class CorruptData(RefocusError):
    """File claims a supported format but its payload does not decode."""


class MissingSidecar(RefocusError):
    """PNG16 depth supplied without its meters_per_unit JSON sidecar."""


class TooSmall(RefocusError):
    """Raster below the minimum size an operation is defined on."""


class NotExif(RefocusError):
    """Byte buffer does not start with an EXIF payload or TIFF header."""


class MissingTag(RefocusError):
    """A required metadata tag is absent. Carries the numeric tag id."""

    def __init__(self, tag: int):
        self.tag = tag
        super().__init__(f"missing tag 0x{tag:04X}")


class MalformedIfd(RefocusError):
    """Structurally broken metadata: offsets out of range, zero denominators."""


class NoValidPixels(RefocusError):
    """Depth map carries no usable pixels."""


class DegenerateFocus(RefocusError):
    """Focus distance does not exceed focal length; thin-lens model breaks down."""


class MissingField(RefocusError):
    """Lens metadata lacks a value a computation needs."""


class NoValidNeighbors(RefocusError):
    """Focus-point neighborhood contains no valid disparity."""


class EmptyMask(RefocusError):
    """Focus mask selects no valid pixels."""


class DegenerateShape(RefocusError):
    """Aperture shape with no usable area or mass."""


class DimensionMismatch(RefocusError):
    """Rasters that must share dimensions do not."""


class InvalidBounds(RefocusError):
    """Search bounds violate k_min < k_max or positivity constraints."""


class SchemaViolation(RefocusError):
    """Manifest line failing the record schema. Carries the 1-based line number."""

    def __init__(self, line_no: int, message: str):
        self.line_no = line_no
        super().__init__(f"line {line_no}: {message}")

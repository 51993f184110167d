"""Exception hierarchy shared across the package."""


class RoomcloudError(Exception):
    """Base class for all errors raised by roomcloud."""


class GeometryError(RoomcloudError, ValueError):
    pass


class InvalidPolygonError(GeometryError):
    """Fewer than three vertices, non-finite coordinates, or a bad shape."""


class DegeneratePolygonError(GeometryError):
    """The polygon encloses zero area."""


class OutOfBoundsError(GeometryError):
    pass


class MeshError(RoomcloudError, ValueError):
    pass


class NoWallsError(RoomcloudError, ValueError):
    """Histogram or wall image carries no evidence of walls."""


class SampleRejected(RoomcloudError):
    """A generated scene lost every wall pixel to noise; draw a new scene."""


class DatasetFormatError(RoomcloudError, ValueError):
    pass


class NumericError(RoomcloudError, ArithmeticError):
    """Loss or gradient became non-finite."""

    def __init__(self, message, sample_ids=None):
        super().__init__(message)
        self.sample_ids = list(sample_ids or [])


class PartialRoomError(RoomcloudError, ValueError):
    def __init__(self, message, remainder):
        super().__init__(message)
        self.remainder = remainder

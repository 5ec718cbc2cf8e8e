"""Exception hierarchy shared across the toolkit."""


class SalientCutError(Exception):
    """Base class for all toolkit errors."""


class CorruptStream(SalientCutError):
    pass


class UnsupportedFormat(SalientCutError):
    pass


class WrongChannelCount(SalientCutError):
    pass


class DimensionMismatch(SalientCutError):
    pass


class EmptyHistogram(SalientCutError):
    pass


class UnfittedModel(SalientCutError):
    pass


class DegenerateMask(SalientCutError):
    """Raised when a mask admits no solvable trimap (no salient object)."""


class TooManyColors(SalientCutError):
    """Input to palette jitter is not a segmentation map."""


class MissingEntry(SalientCutError):
    """Cache lookup miss in strict mode."""


class StaleEntry(SalientCutError):
    """Cached map dimensions do not match the query image."""


class ManifestMissing(SalientCutError):
    pass


class VersionMismatch(SalientCutError):
    pass


class ShapeError(SalientCutError):
    """Array with wrong shape or dtype at an API boundary."""

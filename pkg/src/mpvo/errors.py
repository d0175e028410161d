"""Exception hierarchy shared by every module."""


class MpvoError(Exception):
    """Base class for all library errors."""


class InvalidDepth(MpvoError, ValueError):
    pass


class OutOfBounds(MpvoError, ValueError):
    pass


class EmptyCorrespondences(MpvoError, ValueError):
    pass


class DegenerateInput(MpvoError, ValueError):
    pass


class InsufficientSupport(MpvoError, ValueError):
    """Too few correspondences to trust any estimate."""


class EmptySet(MpvoError, ValueError):
    pass


class DimensionMismatch(MpvoError, ValueError):
    pass


class EmptyInput(MpvoError, ValueError):
    pass


class LengthMismatch(MpvoError, ValueError):
    pass


class InvalidAction(MpvoError, ValueError):
    pass


class ConfigParse(MpvoError, ValueError):
    """Malformed or semantically invalid configuration (CLI exit code 1)."""


class FileFormat(MpvoError, ValueError):
    """Malformed data file (CLI exit code 2)."""

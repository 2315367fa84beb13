"""Exception hierarchy shared across the package."""


class StRlvrError(Exception):
    """Base class for all package errors."""


class ScenePathError(StRlvrError):
    """An error tied to a location inside a scene file.

    ``path`` is a JSON-pointer-like string such as ``tracks[2].observations[0].box``.
    """

    def __init__(self, message: str, path: str = ""):
        self.message = message
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class ParseError(ScenePathError):
    pass


class SchemaError(ScenePathError):
    pass


class InvariantError(ScenePathError):
    pass


class DimensionError(StRlvrError, ValueError):
    pass


class EmptyTrackError(StRlvrError, ValueError):
    pass


class EmptyFrameError(StRlvrError, ValueError):
    pass


class LengthMismatchError(StRlvrError, ValueError):
    pass


class NotARotationError(StRlvrError, ValueError):
    pass


class QuotaUnsatisfiableError(StRlvrError):
    pass


class ExtractionError(StRlvrError, ValueError):
    pass


class GroupTooSmallError(StRlvrError, ValueError):
    pass


class SupportMismatchError(StRlvrError, ValueError):
    pass


class ConfigError(StRlvrError, ValueError):
    pass

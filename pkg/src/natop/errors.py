class NatopError(Exception):
    """Base class for errors raised by natop."""


class BundleError(NatopError, ValueError):
    """Malformed or unsupported bundle description."""


class BundleParseError(BundleError):
    """Syntax error in a bundle expression; ``position`` is a 0-based offset."""

    def __init__(self, message: str, position: int | None = None):
        self.position = position
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)


class DimensionMismatch(NatopError, ValueError):
    pass


class ShapeMismatch(NatopError, ValueError):
    pass


class SignatureMismatch(NatopError, ValueError):
    """Operator scheme and classification query refer to different bundles."""


class ResourceCapExceeded(NatopError, RuntimeError):
    """A configured size limit was hit; the computation was refused, not truncated."""


class SmoothnessExhausted(NatopError, ValueError):
    """A spline section is not smooth enough for the requested derivatives."""

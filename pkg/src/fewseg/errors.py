"""Exception types shared across the package."""

from __future__ import annotations


class FewsegError(Exception):
    """Base class for all package errors."""


class ParameterError(FewsegError):
    """An argument violates a documented precondition."""


class InvalidContourError(FewsegError):
    """Contour input is malformed (wrong control-point count, open polyline)."""


class EmptyMaskError(FewsegError):
    """Operation requires at least one foreground pixel."""


class ShapeError(FewsegError):
    """Array dimensions are inconsistent."""


class InfeasibleConstraintError(FewsegError):
    """Rejection sampling exhausted its budget for a distance constraint."""


class LayoutGenerationError(FewsegError):
    """A region layout could not be produced within the resample budget."""


class TemplateInputError(FewsegError):
    """Instruction rendering received inconsistent inputs."""


class EncodingError(FewsegError):
    """A coordinate cannot be represented in the token vocabulary."""


class PolygonParseError(FewsegError):
    """Model output does not conform to the polygon tuple grammar."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at offset {position})")
        self.position = position
        self.reason = message


class DegenerateVectorError(FewsegError):
    """A vector with zero norm cannot be compared by cosine similarity."""


class OracleProtocolError(FewsegError):
    """An oracle response violates the expected reply format."""

    def __init__(self, message: str, response: str):
        super().__init__(f"{message}: {response!r}")
        self.response = response


class ConfigError(FewsegError):
    """Generation config file is invalid."""


class ManifestError(FewsegError):
    """Dataset manifest is missing files or fails digest validation."""

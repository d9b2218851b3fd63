"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class CrossLocateError(Exception):
    """Base class for every error raised by the package."""


class GridFormatError(CrossLocateError, ValueError):
    """A DEM file could not be parsed."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class GridLookupError(CrossLocateError, LookupError):
    """A coordinate does not resolve to a usable grid node."""


class DegenerateCloudError(CrossLocateError, ValueError):
    """Normalization statistics cannot be fitted (zero spread on some axis)."""


class ConstructionError(CrossLocateError):
    """A cross could not be laid out on the DEM."""

    def __init__(self, message: str, arm: int | None = None, index: int | None = None):
        self.arm = arm
        self.index = index
        super().__init__(message)


class DegenerateGeometryError(CrossLocateError, ValueError):
    """A finite difference has a zero-length chord."""

    def __init__(self, message: str, index: int):
        self.index = index
        super().__init__(message)


class NoCandidatesError(CrossLocateError):
    """No DEM node satisfies the center window constraints."""


class InfeasibleError(CrossLocateError):
    """Every (center, angle) candidate violated the snapping tolerance."""


class SpecError(CrossLocateError, ValueError):
    """An experiment configuration failed validation."""

    def __init__(self, message: str, field: str | None = None):
        self.field = field
        if field is not None:
            message = f"{field}: {message}"
        super().__init__(message)

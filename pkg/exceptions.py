from typing import Optional


class DecompositionError(Exception):
    """Base class for every error raised by the decomposition library."""


class ModelDomainError(DecompositionError, ValueError):
    """Model inputs outside the physical domain (T <= 0, f <= 0, log argument <= 1)."""


class DimensionMismatchError(DecompositionError, ValueError):
    """Parameter vector, grid or intensity shapes do not agree."""


class DiagnosticPreconditionError(DecompositionError, ValueError):
    """A residual test cannot be run on the given sample."""


class InvalidSpectrumError(DecompositionError, ValueError):
    """Spectrum data violates its invariants."""


class SpectrumFormatError(InvalidSpectrumError):
    """Malformed spectrum file. `line` is the 1-based physical line, when known."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)

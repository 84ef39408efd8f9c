from abc import ABC, abstractmethod

from models import Spectrum


class SpectrumRepository(ABC):
    """Abstract source of a measured spectrum."""

    @abstractmethod
    def load(self) -> Spectrum:
        """Return the spectrum, validated against its invariants."""
        pass

    @abstractmethod
    def describe(self) -> str:
        """Short human-readable origin, used in summaries."""
        pass

    def close(self):
        pass

from typing import Optional

from models import Spectrum, SyntheticSpectrum
from repository import SpectrumRepository


class InMemorySpectrumRepository(SpectrumRepository):
    """
    SpectrumRepository over a spectrum that already lives in memory,
    typically a synthetic one. Optionally overrides var_eps.
    """

    def __init__(self, spectrum: Spectrum, label: str = "in-memory spectrum",
                 var_eps_override: Optional[float] = None):
        self._spectrum = spectrum
        self._label = label
        self._var_eps_override = var_eps_override

    @classmethod
    def from_synthetic(cls, synthetic: SyntheticSpectrum, label: str = "synthetic spectrum"):
        return cls(synthetic.spectrum, label)

    def load(self) -> Spectrum:
        if self._var_eps_override is not None:
            return self._spectrum.with_var_eps(self._var_eps_override)
        return self._spectrum

    def describe(self) -> str:
        return f"{self._label} ({len(self._spectrum)} points)"

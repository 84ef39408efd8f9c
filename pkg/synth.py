"""
Ground-truth synthetic spectra.

Noise comes from numpy's Generator with the PCG64 bit generator seeded
by `SynthSpec.seed`, drawing standard normals with its ziggurat sampler.
That pairing is frozen so fixtures reproduce across platforms.
"""
from typing import List, Sequence

import numpy as np

from debye import CODATA_2018, make_component, spectrum_model
from models import DebyeComponent, PhysicalConstants, Spectrum, SynthSpec, SyntheticSpectrum

CANONICAL_PEAKS = ((1.0, 450.0), (1.0, 550.0), (1.0, 650.0))
CANONICAL_RANGE = (350.0, 750.0)
CANONICAL_POINTS = 400
CANONICAL_NOISE_SD = 0.01


def noise_generator(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def parse_peaks(text: str, frequency: float, c: PhysicalConstants = CODATA_2018) -> List[DebyeComponent]:
    """Parse "Q0:T0,Q0:T0,..." into components."""
    components = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        try:
            q0, t0 = (float(part) for part in chunk.split(":"))
        except ValueError:
            raise ValueError(f"peak {chunk!r} is not of the form Q0:T0") from None
        components.append(make_component(q0, t0, frequency, c))
    if not components:
        raise ValueError("no peaks given")
    return components


def canonical_spec(frequency: float = 1.0, noise_sd: float = CANONICAL_NOISE_SD, seed: int = 42,
                   c: PhysicalConstants = CODATA_2018) -> SynthSpec:
    """Three equal peaks at 450, 550 and 650 K on 400 points over 350-750 K."""
    return SynthSpec(
        components=tuple(make_component(q, t, frequency, c) for q, t in CANONICAL_PEAKS),
        t_range=CANONICAL_RANGE,
        n_points=CANONICAL_POINTS,
        noise_sd=noise_sd,
        frequency=frequency,
        seed=seed,
    )


def generate(spec: SynthSpec, c: PhysicalConstants = CODATA_2018) -> SyntheticSpectrum:
    t_min, t_max = spec.t_range
    temperatures = np.linspace(t_min, t_max, spec.n_points)
    noise_free = spectrum_model(temperatures, spec.components, c)
    noise = noise_generator(spec.seed).standard_normal(spec.n_points) * spec.noise_sd
    spectrum = Spectrum(temperatures, noise_free + noise, var_eps=spec.noise_sd ** 2)
    return SyntheticSpectrum(spectrum=spectrum, truth=tuple(spec.components), noise_free=noise_free)


def synthesize(components: Sequence[DebyeComponent], t_range, n_points: int, noise_sd: float,
               frequency: float, seed: int = 42) -> SyntheticSpectrum:
    return generate(SynthSpec(tuple(components), tuple(t_range), n_points, noise_sd, frequency, seed))

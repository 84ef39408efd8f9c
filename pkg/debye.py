"""
Debye multi-peak spectrum model.

    Q(T) = sum_j Q0_j / cosh[(E_j / R) (1/T - 1/T0_j)]
    E_j  = R T0_j ln(k_b T0_j / (h f))

The inverse cosh above is the reciprocal
(sech), not arccosh. E_j is always recomputed from T0_j; only the
amplitudes and peak temperatures are free.
"""
from typing import List, Sequence

import numpy as np

from exceptions import DimensionMismatchError, ModelDomainError
from models import DebyeComponent, PhysicalConstants

CODATA_2018 = PhysicalConstants()

# cosh overflows double precision just above this argument
COSH_OVERFLOW = 710.0


def _log_argument(T0, frequency: float, c: PhysicalConstants):
    T0 = np.asarray(T0, dtype=float)
    if not frequency > 0:
        raise ModelDomainError(f"frequency must be positive, got {frequency}")
    if np.any(~(T0 > 0)):
        raise ModelDomainError(f"peak temperature must be positive, got {T0}")
    ratio = c.k_b * T0 / (c.h_planck * frequency)
    if np.any(ratio <= 1.0):
        raise ModelDomainError(
            f"k_b*T0/(h*f) must exceed 1 for a positive activation energy (T0={T0}, f={frequency})"
        )
    return np.log(ratio)


def activation_energy(T0: float, frequency: float, c: PhysicalConstants = CODATA_2018) -> float:
    """Activation energy (J/mol) of a peak at T0 (K) measured at frequency f (Hz)."""
    return float(c.R_gas * T0 * _log_argument(T0, frequency, c))


def make_component(Q0: float, T0: float, frequency: float,
                   c: PhysicalConstants = CODATA_2018) -> DebyeComponent:
    return DebyeComponent(Q0=float(Q0), T0=float(T0), E=activation_energy(T0, frequency, c))


def _sech(u: np.ndarray) -> np.ndarray:
    overflow = np.abs(u) > COSH_OVERFLOW
    safe = np.where(overflow, 0.0, u)
    return np.where(overflow, 0.0, 1.0 / np.cosh(safe))


def _check_temperatures(T) -> np.ndarray:
    T = np.asarray(T, dtype=float)
    if np.any(~(T > 0)):
        raise ModelDomainError("temperatures must be strictly positive")
    return T


def debye_peak(T, comp: DebyeComponent, c: PhysicalConstants = CODATA_2018):
    """Single Debye term at temperature(s) T. Scalar in, float out."""
    T_arr = _check_temperatures(T)
    u = (comp.E / c.R_gas) * (1.0 / T_arr - 1.0 / comp.T0)
    value = comp.Q0 * _sech(u)
    return float(value) if value.ndim == 0 else value


def spectrum_model(T_grid: Sequence[float], components: Sequence[DebyeComponent],
                   c: PhysicalConstants = CODATA_2018) -> np.ndarray:
    if len(components) == 0:
        raise DimensionMismatchError("at least one component is required")
    T = np.atleast_1d(_check_temperatures(T_grid))
    total = np.zeros_like(T)
    for comp in components:
        total += debye_peak(T, comp, c)
    return total


# ------------------------------------------------------------------ #
#  Parameter vector layout: [Q0_1..Q0_n, T0_1..T0_n]
# ------------------------------------------------------------------ #

def split_params(params) -> tuple:
    params = np.asarray(params, dtype=float)
    if params.ndim != 1 or params.size == 0 or params.size % 2:
        raise DimensionMismatchError(
            f"parameter vector must have even, non-zero length, got shape {params.shape}"
        )
    n = params.size // 2
    return params[:n], params[n:]


def params_to_components(params, frequency: float,
                         c: PhysicalConstants = CODATA_2018) -> List[DebyeComponent]:
    amplitudes, temperatures = split_params(params)
    return [make_component(q, t, frequency, c) for q, t in zip(amplitudes, temperatures)]


def components_to_params(components: Sequence[DebyeComponent]) -> np.ndarray:
    if len(components) == 0:
        raise DimensionMismatchError("at least one component is required")
    return np.array([comp.Q0 for comp in components] + [comp.T0 for comp in components], dtype=float)


def evaluate(T_grid, params, frequency: float, c: PhysicalConstants = CODATA_2018) -> np.ndarray:
    """spectrum_model driven directly by a parameter vector."""
    return spectrum_model(T_grid, params_to_components(params, frequency, c), c)


def model_jacobian(T_grid, params, frequency: float,
                   c: PhysicalConstants = CODATA_2018) -> np.ndarray:
    """
    Analytic Jacobian of the model, shape (len(T_grid), 2n).

    With L_j = ln(k_b T0_j / (h f)) the sech argument is
    u_j = L_j (T0_j / T - 1), so E_j / R cancels R and

        du_j/dT0_j = (L_j + 1)(1/T - 1/T0_j) + L_j / T0_j

    which folds in the dE_j/dT0_j = R (L_j + 1) chain term.
    """
    T = np.atleast_1d(_check_temperatures(T_grid))[:, None]
    amplitudes, peak_temperatures = split_params(params)
    L = _log_argument(peak_temperatures, frequency, c)[None, :]
    T0 = peak_temperatures[None, :]

    u = L * (T0 / T - 1.0)
    sech = _sech(u)
    du_dT0 = (L + 1.0) * (1.0 / T - 1.0 / T0) + L / T0

    jac_amplitude = sech
    jac_temperature = -amplitudes[None, :] * sech * np.tanh(u) * du_dT0
    return np.hstack([jac_amplitude, jac_temperature])

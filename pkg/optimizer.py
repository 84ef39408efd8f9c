import logging
from typing import Optional

import numpy as np
import scipy.linalg

from debye import CODATA_2018, evaluate, model_jacobian, split_params
from exceptions import DimensionMismatchError, ModelDomainError
from models import FitResult, LMOptions, PhysicalConstants, SolverMethod, Spectrum, TerminationReason

logger = logging.getLogger(__name__)

# Peak temperatures are carried internally as T0 * 1e-2 so both parameter
# blocks have comparable magnitudes.
T0_SCALE = 1e-2
MAX_DAMPING = 1e16
DIAGONAL_FLOOR = 1e-12
RANK_CONDITION = 1e-13
MAX_STEP_HALVINGS = 30


def _sse(residuals: np.ndarray) -> float:
    return float(np.sum(residuals * residuals))


def sum_squared_residuals(spectrum: Spectrum, params, frequency: float,
                          c: PhysicalConstants = CODATA_2018) -> float:
    model = evaluate(spectrum.temperatures, params, frequency, c)
    return _sse(spectrum.intensities - model)


class LevenbergMarquardtFitter:
    """
    Unweighted nonlinear least squares for the Debye model.

    Multiplicative Marquardt damping on the scaled normal equations, solved
    with a pivoted (rank-revealing) QR least-squares routine. A numerically
    singular damped system raises the damping and retries. Peak
    temperatures are clamped to [min(T)/2, 2 max(T)] after every step.
    """

    def __init__(self, options: Optional[LMOptions] = None,
                 constants: PhysicalConstants = CODATA_2018):
        self.options = options or LMOptions()
        self.constants = constants

    def fit(self, spectrum: Spectrum, initial, frequency: float) -> FitResult:
        temperatures = spectrum.temperatures
        measured = spectrum.intensities

        amplitudes, peak_temperatures = split_params(initial)
        n = amplitudes.size
        if len(spectrum) < 2 * n + 1:
            raise DimensionMismatchError(
                f"{len(spectrum)} points cannot support {n} components (need at least {2 * n + 1})"
            )

        lower, upper = temperatures.min() / 2.0, 2.0 * temperatures.max()
        scale = np.concatenate([np.ones(n), np.full(n, T0_SCALE)])

        def clamp(params: np.ndarray) -> np.ndarray:
            params = params.copy()
            params[n:] = np.clip(params[n:], lower, upper)
            return params

        def residuals_at(params: np.ndarray) -> np.ndarray:
            return measured - evaluate(temperatures, params, frequency, self.constants)

        params = clamp(np.asarray(initial, dtype=float))
        residuals = residuals_at(params)
        sse = _sse(residuals)

        opts = self.options
        damping = opts.initial_damping
        reason = TerminationReason.MAX_ITERATIONS
        iterations = 0
        jacobian = gradient = normal = None

        while True:
            if jacobian is None:
                # derivative with respect to the scaled parameters z = params * scale
                jacobian = model_jacobian(temperatures, params, frequency, self.constants) / scale
                gradient = jacobian.T @ residuals
                normal = jacobian.T @ jacobian
                if np.max(np.abs(gradient)) <= opts.gradient_tolerance:
                    reason = TerminationReason.GRADIENT
                    break

            if iterations >= opts.max_iterations:
                break
            iterations += 1

            if opts.method is SolverMethod.GAUSS_NEWTON:
                outcome = self._gauss_newton_step(jacobian, residuals, params, scale, clamp, residuals_at, sse)
            else:
                outcome = self._damped_step(normal, gradient, damping, params, scale, clamp, residuals_at, sse)

            kind, trial = outcome
            if kind == "converged":
                reason = TerminationReason.STEP
                break
            if kind == "rejected":
                damping *= opts.damping_increase
                if damping > MAX_DAMPING:
                    reason = TerminationReason.STEP
                    break
                logger.debug("iteration %d: step rejected, damping -> %.3g", iterations, damping)
                continue

            new_params, new_residuals, new_sse = trial
            reduction = sse - new_sse
            previous_sse = sse
            params, residuals, sse = new_params, new_residuals, new_sse
            damping = max(damping * opts.damping_decrease, np.finfo(float).tiny)
            jacobian = None
            logger.debug("iteration %d: sse %.6e, damping %.3g", iterations, sse, damping)

            if sse == 0.0 or reduction <= opts.sse_tolerance * previous_sse:
                reason = TerminationReason.SSE
                break

        converged = reason is not TerminationReason.MAX_ITERATIONS
        if not converged:
            logger.info("fit stopped at the iteration cap (%d) with sse %.6e", opts.max_iterations, sse)
        return FitResult(
            params=params,
            residuals=residuals,
            sse=_sse(residuals),
            iterations=iterations,
            converged=converged,
            termination_reason=reason,
        )

    # ------------------------------------------------------------------ #
    #  Step proposals
    # ------------------------------------------------------------------ #

    def _step_is_negligible(self, step: np.ndarray, scaled: np.ndarray) -> bool:
        tol = self.options.step_tolerance
        return float(np.linalg.norm(step)) <= tol * (float(np.linalg.norm(scaled)) + tol)

    def _try(self, params, residuals_at, sse):
        try:
            residuals = residuals_at(params)
        except ModelDomainError:
            return None
        trial_sse = _sse(residuals)
        if not np.isfinite(trial_sse) or trial_sse >= sse:
            return None
        return params, residuals, trial_sse

    def _damped_step(self, normal, gradient, damping, params, scale, clamp, residuals_at, sse):
        diagonal = np.diag(normal)
        floor = DIAGONAL_FLOOR * max(float(diagonal.max()), np.finfo(float).tiny)
        damped = normal + damping * np.diag(np.maximum(diagonal, floor))

        step, _, rank, _ = scipy.linalg.lstsq(damped, gradient, cond=RANK_CONDITION, lapack_driver="gelsy")
        if rank < damped.shape[0] or not np.all(np.isfinite(step)):
            return "rejected", None

        scaled = params * scale
        if self._step_is_negligible(step, scaled):
            return "converged", None

        trial = self._try(clamp((scaled + step) / scale), residuals_at, sse)
        return ("accepted", trial) if trial is not None else ("rejected", None)

    def _gauss_newton_step(self, jacobian, residuals, params, scale, clamp, residuals_at, sse):
        step, _, _, _ = scipy.linalg.lstsq(jacobian, residuals, cond=RANK_CONDITION, lapack_driver="gelsy")
        scaled = params * scale
        factor = 1.0
        for _ in range(MAX_STEP_HALVINGS):
            if self._step_is_negligible(factor * step, scaled):
                return "converged", None
            trial = self._try(clamp((scaled + factor * step) / scale), residuals_at, sse)
            if trial is not None:
                return "accepted", trial
            factor /= 2.0
        return "converged", None


def fit(spectrum: Spectrum, initial, frequency: float, opts: Optional[LMOptions] = None,
        c: PhysicalConstants = CODATA_2018) -> FitResult:
    return LevenbergMarquardtFitter(opts, c).fit(spectrum, initial, frequency)

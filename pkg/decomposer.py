import dataclasses
import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from debye import evaluate, split_params
from diagnostics import assess_adequacy
from exceptions import DecompositionError, DimensionMismatchError, InvalidSpectrumError
from models import (
    AdequacyReport,
    Attempt,
    DecompositionConfig,
    DecompositionResult,
    DecompositionStatus,
    FitResult,
    Spectrum,
)
from optimizer import LevenbergMarquardtFitter

logger = logging.getLogger(__name__)

# fitted amplitudes below this fraction of the largest measured intensity are spurious
NEGLIGIBLE_AMPLITUDE = 1e-3


def _check_nonempty(spectrum: Spectrum):
    if len(spectrum) == 0:
        raise InvalidSpectrumError("spectrum is empty")
    if not np.any(spectrum.intensities):
        raise InvalidSpectrumError("spectrum intensities are all zero")


def _with_residual_peak(spectrum: Spectrum, params: np.ndarray, residuals: np.ndarray) -> np.ndarray:
    """Append one component at the largest |residual|, amplitude equal to the signed residual."""
    if residuals.shape != spectrum.intensities.shape:
        raise DimensionMismatchError(
            f"residual vector length {residuals.size} does not match spectrum length {len(spectrum)}"
        )
    amplitudes, temperatures = split_params(params)
    index = int(np.argmax(np.abs(residuals)))
    return np.concatenate([
        amplitudes, [residuals[index]],
        temperatures, [spectrum.temperatures[index]],
    ])


def initial_guess(spectrum: Spectrum, previous: Optional[FitResult] = None) -> np.ndarray:
    """
    Starting parameters for the next attempt.

    Without a previous fit: one component at the global maximum of the data.
    Otherwise the previous parameters are carried over unchanged and one
    component is added at the largest residual.
    """
    _check_nonempty(spectrum)
    if previous is None:
        index = int(np.argmax(spectrum.intensities))
        return np.array([spectrum.intensities[index], spectrum.temperatures[index]])
    return _with_residual_peak(spectrum, previous.params, previous.residuals)


class SpectrumDecomposer:
    """
    Adaptive decomposition loop: fit n components, test the residuals, and
    add one component at a time until the residuals pass or the cap is hit.
    """

    def __init__(self, config: DecompositionConfig,
                 fitter: Optional[LevenbergMarquardtFitter] = None):
        self.config = config
        self.fitter = fitter or LevenbergMarquardtFitter(config.lm, config.constants)

    def decompose(self, spectrum: Spectrum) -> DecompositionResult:
        _check_nonempty(spectrum)
        cap = self.config.max_components
        if len(spectrum) <= 2 * cap:
            raise DimensionMismatchError(
                f"{len(spectrum)} points are too few for up to {cap} components (need more than {2 * cap})"
            )

        attempts: List[Attempt] = []
        previous: Optional[FitResult] = None

        for n in tqdm(range(1, cap + 1), desc="Decomposing", disable=not self.config.show_progress):
            try:
                guess = self._grow(spectrum, previous, n)
                fit, warnings = self._fit_warm(spectrum, guess, previous)
                report = self._assess(fit, spectrum)
            except DecompositionError as exc:
                logger.warning("attempt with %d component(s) failed: %s", n, exc)
                attempts.append(Attempt(n_components=n, fit=None, report=None, error=str(exc)))
                continue

            attempt = Attempt(n_components=n, fit=fit, report=report, warnings=warnings)
            attempts.append(attempt)
            previous = fit
            logger.info(
                "n=%d: sse=%.6e, %s", n, fit.sse, "adequate" if report.adequate else "inadequate"
            )
            if report.adequate:
                return self._result(DecompositionStatus.ADEQUATE, attempt, attempts)

        return self._result(DecompositionStatus.CAP_REACHED, None, attempts)

    def evaluate(self, spectrum: Spectrum, initial: Sequence[float]) -> DecompositionResult:
        """Single fit from analyst-supplied starting values, followed by the adequacy battery."""
        _check_nonempty(spectrum)
        fit = self.fitter.fit(spectrum, np.asarray(initial, dtype=float), self.config.frequency)
        report = self._assess(fit, spectrum)
        attempt = Attempt(n_components=fit.n_components, fit=fit, report=report)
        status = DecompositionStatus.ADEQUATE if report.adequate else DecompositionStatus.CAP_REACHED
        return self._result(status, attempt if report.adequate else None, [attempt])

    # ------------------------------------------------------------------ #
    #  Loop steps
    # ------------------------------------------------------------------ #

    def _grow(self, spectrum: Spectrum, previous: Optional[FitResult], n: int) -> np.ndarray:
        params = initial_guess(spectrum, previous)
        # an errored attempt leaves a gap; keep adding residual-peak components
        while params.size // 2 < n:
            residuals = spectrum.intensities - evaluate(
                spectrum.temperatures, params, self.config.frequency, self.config.constants
            )
            params = _with_residual_peak(spectrum, params, residuals)
        return params

    def _fit_warm(self, spectrum: Spectrum, guess: np.ndarray,
                  previous: Optional[FitResult]) -> Tuple[FitResult, Tuple[str, ...]]:
        frequency = self.config.frequency
        fit = self.fitter.fit(spectrum, guess, frequency)
        if previous is None or fit.sse <= previous.sse:
            return fit, ()

        n = guess.size // 2
        halved = guess.copy()
        halved[n - 1] *= 0.5
        retry = self.fitter.fit(spectrum, halved, frequency)
        best = fit if fit.sse <= retry.sse else retry
        if best.sse <= previous.sse:
            return best, ("warm start retried with the new amplitude halved",)

        message = (
            f"{n}-component fits ended above the previous sse ({best.sse:.6e} > {previous.sse:.6e}); "
            f"keeping the previous solution with a zero-amplitude component"
        )
        logger.warning(message)
        amplitudes, temperatures = split_params(previous.params)
        added = n - amplitudes.size
        padded = np.concatenate([amplitudes, np.zeros(added), temperatures, guess[n + amplitudes.size:]])
        residuals = spectrum.intensities - evaluate(
            spectrum.temperatures, padded, frequency, self.config.constants
        )
        kept = FitResult(
            params=padded,
            residuals=residuals,
            sse=float(np.sum(residuals * residuals)),
            iterations=0,
            converged=previous.converged,
            termination_reason=previous.termination_reason,
        )
        return kept, (message,)

    def _assess(self, fit: FitResult, spectrum: Spectrum) -> AdequacyReport:
        n_free = self.config.dof_mode.free_parameters(fit.n_components)
        report = assess_adequacy(fit, spectrum, n_free, self.config.diagnostics)

        threshold = NEGLIGIBLE_AMPLITUDE * float(np.max(np.abs(spectrum.intensities)))
        spurious = [
            index + 1 for index, q in enumerate(fit.amplitudes) if q < 0 or abs(q) < threshold
        ]
        if spurious:
            note = f"spurious component(s) {spurious}: negative or negligible amplitude"
            report = dataclasses.replace(report, adequate=False, notes=report.notes + (note,))
        return report

    def _result(self, status: DecompositionStatus, accepted: Optional[Attempt],
                attempts: List[Attempt]) -> DecompositionResult:
        return DecompositionResult(
            status=status,
            accepted=accepted,
            attempts=tuple(attempts),
            frequency=self.config.frequency,
            constants=self.config.constants,
        )


def decompose(spectrum: Spectrum, config: DecompositionConfig) -> DecompositionResult:
    return SpectrumDecomposer(config).decompose(spectrum)

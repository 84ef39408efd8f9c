from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Tuple

import numpy as np

from exceptions import InvalidSpectrumError


def _frozen_array(values) -> np.ndarray:
    array = np.array(values, dtype=float)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class PhysicalConstants:
    """CODATA-2018 constants used by the activation-energy relation."""
    R_gas: float = 8.31446261815324   # J/(mol K)
    k_b: float = 1.380649e-23         # J/K
    h_planck: float = 6.62607015e-34  # J s

    def __post_init__(self):
        if min(self.R_gas, self.k_b, self.h_planck) <= 0:
            raise ValueError("physical constants must be strictly positive")


@dataclass(frozen=True)
class DebyeComponent:
    """
    One Debye peak. E is derived from T0 and the measurement frequency, so
    build components with debye.make_component rather than directly.
    """
    Q0: float
    T0: float  # K
    E: float   # J/mol

    def __post_init__(self):
        if not self.T0 > 0:
            raise ValueError(f"peak temperature must be positive, got {self.T0}")


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Measured spectrum: ascending temperature grid, intensities, optional error variance."""
    temperatures: np.ndarray
    intensities: np.ndarray
    var_eps: Optional[float] = None

    def __post_init__(self):
        temperatures = _frozen_array(self.temperatures)
        intensities = _frozen_array(self.intensities)
        object.__setattr__(self, "temperatures", temperatures)
        object.__setattr__(self, "intensities", intensities)

        if temperatures.ndim != 1 or temperatures.shape != intensities.shape:
            raise InvalidSpectrumError(
                f"temperatures {temperatures.shape} and intensities {intensities.shape} must be "
                f"1-D vectors of equal length"
            )
        if not (np.all(np.isfinite(temperatures)) and np.all(np.isfinite(intensities))):
            raise InvalidSpectrumError("spectrum values must be finite")
        if temperatures.size and temperatures[0] <= 0:
            raise InvalidSpectrumError("temperatures must be strictly positive")
        if np.any(np.diff(temperatures) <= 0):
            raise InvalidSpectrumError("temperatures must be strictly increasing")
        if self.var_eps is not None:
            if not (np.isfinite(self.var_eps) and self.var_eps >= 0):
                raise InvalidSpectrumError(f"var_eps must be a finite non-negative number, got {self.var_eps}")
            object.__setattr__(self, "var_eps", float(self.var_eps))

    def __len__(self) -> int:
        return int(self.temperatures.size)

    def with_var_eps(self, var_eps: Optional[float]) -> "Spectrum":
        return Spectrum(self.temperatures, self.intensities, var_eps)


class SolverMethod(str, Enum):
    LEVENBERG_MARQUARDT = "levenberg_marquardt"
    GAUSS_NEWTON = "gauss_newton"


@dataclass(frozen=True)
class LMOptions:
    max_iterations: int = 200
    initial_damping: float = 1e-3
    damping_increase: float = 10.0
    damping_decrease: float = 0.1
    gradient_tolerance: float = 1e-10
    step_tolerance: float = 1e-10
    sse_tolerance: float = 1e-12
    method: SolverMethod = SolverMethod.LEVENBERG_MARQUARDT

    def __post_init__(self):
        object.__setattr__(self, "method", SolverMethod(self.method))
        tolerances = (self.gradient_tolerance, self.step_tolerance, self.sse_tolerance)
        if min(tolerances) < 0 or max(tolerances) <= 0:
            raise ValueError("tolerances must be >= 0 with at least one > 0")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.initial_damping <= 0:
            raise ValueError("initial_damping must be positive")
        if self.damping_increase <= 1:
            raise ValueError("damping_increase must be > 1")
        if not 0 < self.damping_decrease < 1:
            raise ValueError("damping_decrease must lie in (0, 1)")


class TerminationReason(str, Enum):
    GRADIENT = "gradient"
    STEP = "step"
    SSE = "sse"
    MAX_ITERATIONS = "max_iterations"


@dataclass(frozen=True, eq=False)
class FitResult:
    """Solver outcome. params uses the [Q0_1..Q0_n, T0_1..T0_n] layout."""
    params: np.ndarray
    residuals: np.ndarray  # measured - model
    sse: float
    iterations: int
    converged: bool
    termination_reason: TerminationReason

    def __post_init__(self):
        object.__setattr__(self, "params", _frozen_array(self.params))
        object.__setattr__(self, "residuals", _frozen_array(self.residuals))

    @property
    def n_components(self) -> int:
        return self.params.size // 2

    @property
    def amplitudes(self) -> np.ndarray:
        return self.params[: self.n_components]

    @property
    def peak_temperatures(self) -> np.ndarray:
        return self.params[self.n_components:]


@dataclass(frozen=True)
class TestResult:
    """Outcome of one hypothesis test on the residuals."""
    __test__ = False

    name: str
    statistic: float
    p_value: float
    alpha: float
    passed: bool

    def __post_init__(self):
        if not 0.0 <= self.p_value <= 1.0:
            raise ValueError(f"{self.name}: p-value {self.p_value} outside [0, 1]")
        if self.passed != (self.p_value >= self.alpha):
            raise ValueError(f"{self.name}: passed flag disagrees with p-value and alpha")


@dataclass(frozen=True)
class LagStatistic:
    lag: int
    statistic: float
    p_value: float


@dataclass(frozen=True)
class DurbinWatsonResult:
    lags: Tuple[LagStatistic, ...]
    alpha: float
    passed: bool

    @property
    def max_lag(self) -> int:
        return len(self.lags)

    @property
    def min_p_value(self) -> float:
        return min(lag.p_value for lag in self.lags)


@dataclass(frozen=True)
class AdequacyReport:
    """Residual battery. A criterion is None when it was skipped or could not run."""
    normality: Optional[TestResult]
    zero_mean: Optional[TestResult]
    autocorrelation: Optional[DurbinWatsonResult]
    variance: Optional[TestResult]
    adequate: bool
    notes: Tuple[str, ...] = ()


class DofMode(str, Enum):
    CORRECTED = "corrected"  # amplitudes and peak temperatures both count
    PAPER = "paper"          # component count only

    def free_parameters(self, n_components: int) -> int:
        return 2 * n_components if self is DofMode.CORRECTED else n_components


@dataclass(frozen=True)
class DiagnosticsSettings:
    alpha: float = 0.05
    max_lag: int = 5
    dw_reps: int = 1000
    seed: int = 42

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.max_lag < 1 or self.dw_reps < 1:
            raise ValueError("max_lag and dw_reps must be >= 1")


@dataclass(frozen=True)
class DecompositionConfig:
    frequency: float  # Hz
    alpha: float = 0.05
    max_components: int = 8
    lm: LMOptions = field(default_factory=LMOptions)
    dw_reps: int = 1000
    seed: int = 42
    dof_mode: DofMode = DofMode.CORRECTED
    max_lag: int = 5
    constants: PhysicalConstants = field(default_factory=PhysicalConstants)
    show_progress: bool = False

    def __post_init__(self):
        object.__setattr__(self, "dof_mode", DofMode(self.dof_mode))
        if not self.frequency > 0:
            raise ValueError(f"frequency must be positive, got {self.frequency}")
        if self.max_components < 1:
            raise ValueError("max_components must be >= 1")

    @property
    def diagnostics(self) -> DiagnosticsSettings:
        return DiagnosticsSettings(
            alpha=self.alpha, max_lag=self.max_lag, dw_reps=self.dw_reps, seed=self.seed
        )


@dataclass(frozen=True)
class Attempt:
    """One pass of the decomposition loop at a fixed component count."""
    n_components: int
    fit: Optional[FitResult]
    report: Optional[AdequacyReport]
    error: Optional[str] = None
    warnings: Tuple[str, ...] = ()

    @property
    def adequate(self) -> bool:
        return self.report is not None and self.report.adequate


class DecompositionStatus(str, Enum):
    ADEQUATE = "adequate"
    CAP_REACHED = "cap_reached"


@dataclass(frozen=True)
class DecompositionResult:
    status: DecompositionStatus
    accepted: Optional[Attempt]
    attempts: Tuple[Attempt, ...]
    frequency: float
    constants: PhysicalConstants = field(default_factory=PhysicalConstants)

    @property
    def best_attempt(self) -> Optional[Attempt]:
        """Accepted attempt, else the last attempt that produced a fit."""
        if self.accepted is not None:
            return self.accepted
        fitted = [a for a in self.attempts if a.fit is not None]
        return fitted[-1] if fitted else None


@dataclass(frozen=True)
class SynthSpec:
    components: Tuple[DebyeComponent, ...]
    t_range: Tuple[float, float]
    n_points: int
    noise_sd: float
    frequency: float
    seed: int = 42

    def __post_init__(self):
        t_min, t_max = self.t_range
        if not 0 < t_min < t_max:
            raise ValueError(f"temperature range must satisfy 0 < min < max, got {self.t_range}")
        if self.n_points < 2:
            raise ValueError("n_points must be >= 2")
        if self.noise_sd < 0:
            raise ValueError("noise_sd must be non-negative")
        if not self.components:
            raise ValueError("at least one component is required")


@dataclass(frozen=True, eq=False)
class SyntheticSpectrum:
    spectrum: Spectrum
    truth: Tuple[DebyeComponent, ...]
    noise_free: np.ndarray

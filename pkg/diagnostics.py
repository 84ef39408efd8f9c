"""
Residual adequacy criteria.

A fitted model is adequate when its residuals look like pure measurement
noise: normally distributed (Anderson-Darling), zero mean (one-sample
t-test), serially uncorrelated up to `max_lag` (Durbin-Watson with
bootstrap p-values) and of the known measurement variance (F-type ratio
test with model degrees of freedom). Each criterion is judged at the raw
alpha; there is no multiple-comparison correction.
"""
import logging
from typing import List, Optional

import numpy as np
from scipy import special

from exceptions import DiagnosticPreconditionError, ModelDomainError
from models import (
    AdequacyReport,
    DiagnosticsSettings,
    DurbinWatsonResult,
    FitResult,
    LagStatistic,
    Spectrum,
    TestResult,
)

logger = logging.getLogger(__name__)

AD_MIN_SAMPLE = 8


def _clip_probability(p: float) -> float:
    return float(min(1.0, max(0.0, p)))


# ------------------------------------------------------------------ #
#  Distribution functions
# ------------------------------------------------------------------ #

def normal_cdf(x: float) -> float:
    """Standard normal CDF via the complementary error function."""
    return float(0.5 * special.erfc(-x / np.sqrt(2.0)))


def t_cdf(x: float, df: float) -> float:
    """Student-t CDF through the regularized incomplete beta function."""
    if not df >= 1:
        raise ModelDomainError(f"t distribution needs df >= 1, got {df}")
    if np.isinf(x):
        return 1.0 if x > 0 else 0.0
    tail = 0.5 * special.betainc(df / 2.0, 0.5, df / (df + x * x))
    return float(1.0 - tail if x > 0 else tail)


def f_cdf(x: float, d1: float, d2: float) -> float:
    """Fisher-Snedecor CDF through the regularized incomplete beta function."""
    if not (d1 >= 1 and d2 >= 1):
        raise ModelDomainError(f"F distribution needs d1, d2 >= 1, got ({d1}, {d2})")
    if not x >= 0:
        raise ModelDomainError(f"F distribution is supported on x >= 0, got {x}")
    if np.isinf(x):
        return 1.0
    return float(special.betainc(d1 / 2.0, d2 / 2.0, d1 * x / (d1 * x + d2)))


def _f_survival(x: float, d1: float, d2: float) -> float:
    return 1.0 - f_cdf(x, d1, d2)


# ------------------------------------------------------------------ #
#  Criteria
# ------------------------------------------------------------------ #

def _sample(values, minimum: int, name: str) -> np.ndarray:
    sample = np.asarray(values, dtype=float).ravel()
    if sample.size < minimum:
        raise DiagnosticPreconditionError(f"{name} needs at least {minimum} values, got {sample.size}")
    if not np.all(np.isfinite(sample)):
        raise DiagnosticPreconditionError(f"{name} needs finite values")
    if np.std(sample) == 0:
        raise DiagnosticPreconditionError(f"{name} is undefined for a constant sample")
    return sample


def _anderson_darling_p_value(corrected: float) -> float:
    if corrected < 0.2:
        p = 1.0 - np.exp(-13.436 + 101.14 * corrected - 223.73 * corrected ** 2)
    elif corrected < 0.34:
        p = 1.0 - np.exp(-8.318 + 42.796 * corrected - 59.938 * corrected ** 2)
    elif corrected < 0.6:
        p = np.exp(0.9177 - 4.279 * corrected - 1.38 * corrected ** 2)
    elif corrected < 10.0:
        p = np.exp(1.2937 - 5.709 * corrected + 0.0186 * corrected ** 2)
    else:
        p = 3.7e-24
    return _clip_probability(p)


def anderson_darling_test(sample, alpha: float = 0.05) -> TestResult:
    """
    Composite normality test (mean and variance estimated from the sample).

    The statistic is the plain A^2; the p-value uses the small-sample
    corrected A*^2 = A^2 (1 + 0.75/n + 2.25/n^2).
    """
    x = np.sort(_sample(sample, AD_MIN_SAMPLE, "Anderson-Darling test"))
    n = x.size
    z = (x - x.mean()) / x.std(ddof=1)
    weights = 2.0 * np.arange(1, n + 1) - 1.0
    log_terms = special.log_ndtr(z) + special.log_ndtr(-z[::-1])
    statistic = float(-n - np.sum(weights * log_terms) / n)
    corrected = statistic * (1.0 + 0.75 / n + 2.25 / n ** 2)
    p_value = _anderson_darling_p_value(corrected)
    return TestResult("anderson_darling", statistic, p_value, alpha, p_value >= alpha)


def one_sample_t_test(sample, alpha: float = 0.05) -> TestResult:
    """Two-sided test of zero mean."""
    x = _sample(sample, 2, "t-test")
    n = x.size
    statistic = float(x.mean() / (x.std(ddof=1) / np.sqrt(n)))
    p_value = _clip_probability(2.0 * t_cdf(-abs(statistic), n - 1))
    return TestResult("t_test", statistic, p_value, alpha, p_value >= alpha)


def _durbin_watson_statistics(residuals: np.ndarray, max_lag: int) -> np.ndarray:
    """d_L for L = 1..max_lag along the last axis of `residuals`."""
    denominator = np.sum(residuals * residuals, axis=-1)
    statistics = []
    for lag in range(1, max_lag + 1):
        diff = residuals[..., lag:] - residuals[..., :-lag]
        statistics.append(np.sum(diff * diff, axis=-1) / denominator)
    return np.stack(statistics, axis=-1)


def durbin_watson_test(residuals, regressor, max_lag: int = 5, alpha: float = 0.05,
                       reps: int = 1000, seed: int = 42) -> DurbinWatsonResult:
    """
    Durbin-Watson statistics for lags 1..max_lag of the residuals of an
    intercept-plus-slope OLS fit of `residuals` on `regressor`.

    Two-sided p-values come from a parametric bootstrap: `reps` standard
    normal error vectors are pushed through the same OLS projection.
    """
    e = np.asarray(residuals, dtype=float).ravel()
    x = np.asarray(regressor, dtype=float).ravel()
    if e.size != x.size:
        raise DiagnosticPreconditionError(
            f"residuals ({e.size}) and regressor ({x.size}) lengths differ"
        )
    if max_lag < 1 or e.size < max_lag + 2:
        raise DiagnosticPreconditionError(
            f"Durbin-Watson test up to lag {max_lag} needs at least {max_lag + 2} values, got {e.size}"
        )

    design = np.column_stack([np.ones_like(x), x])
    q, _ = np.linalg.qr(design)

    def project(values: np.ndarray) -> np.ndarray:
        return values - (values @ q) @ q.T

    inner = project(e)
    if np.sum(inner * inner) == 0:
        raise DiagnosticPreconditionError("residuals are fully explained by the regressor")
    observed = _durbin_watson_statistics(inner, max_lag)

    rng = np.random.default_rng(seed)
    simulated = _durbin_watson_statistics(project(rng.standard_normal((reps, e.size))), max_lag)

    lags = []
    for index in range(max_lag):
        d = float(observed[index])
        below = np.mean(simulated[:, index] <= d)
        above = np.mean(simulated[:, index] >= d)
        lags.append(LagStatistic(lag=index + 1, statistic=d, p_value=_clip_probability(2.0 * min(below, above))))

    passed = all(lag.p_value >= alpha for lag in lags)
    return DurbinWatsonResult(lags=tuple(lags), alpha=alpha, passed=passed)


def variance_f_test(residuals, var_eps: float, n_free_params: int, alpha: float = 0.05) -> TestResult:
    """
    Residual variance against the known measurement variance.

    var_res divides by n - p (free model parameters), and both degrees of
    freedom of the reference F distribution are n - p.
    """
    e = np.asarray(residuals, dtype=float).ravel()
    dof = e.size - n_free_params
    if dof < 1:
        raise DiagnosticPreconditionError(
            f"variance test needs more points ({e.size}) than free parameters ({n_free_params})"
        )
    if var_eps is None or not var_eps > 0:
        raise DiagnosticPreconditionError(f"variance test needs var_eps > 0, got {var_eps}")

    var_res = float(np.sum((e - e.mean()) ** 2) / dof)
    low, high = min(var_eps, var_res), max(var_eps, var_res)
    if low == 0:
        statistic, p_value = float("inf"), 0.0
    else:
        statistic = high / low
        p_value = _clip_probability(_f_survival(statistic, dof, dof))
    return TestResult("variance_f", statistic, p_value, alpha, p_value >= alpha)


# ------------------------------------------------------------------ #
#  Battery
# ------------------------------------------------------------------ #

def assess_adequacy(fit: FitResult, spectrum: Spectrum, n_free_params: int,
                    config: Optional[DiagnosticsSettings] = None) -> AdequacyReport:
    """Run every criterion on the fit residuals. A criterion that cannot run fails the report."""
    config = config or DiagnosticsSettings()
    residuals = fit.residuals
    notes: List[str] = []
    failed_to_run = False

    def attempt(label, run):
        nonlocal failed_to_run
        try:
            return run()
        except DiagnosticPreconditionError as exc:
            failed_to_run = True
            notes.append(f"{label} not evaluated: {exc}")
            return None

    normality = attempt("normality", lambda: anderson_darling_test(residuals, config.alpha))
    zero_mean = attempt("zero mean", lambda: one_sample_t_test(residuals, config.alpha))
    autocorrelation = attempt(
        "autocorrelation",
        lambda: durbin_watson_test(
            residuals, spectrum.temperatures, config.max_lag, config.alpha, config.dw_reps, config.seed
        ),
    )

    variance = None
    if spectrum.var_eps is None:
        notes.append("variance test skipped: var_eps not supplied")
        logger.warning("var_eps not supplied; judging adequacy on three criteria")
    else:
        variance = attempt(
            "variance",
            lambda: variance_f_test(residuals, spectrum.var_eps, n_free_params, config.alpha),
        )

    results = [r for r in (normality, zero_mean, autocorrelation, variance) if r is not None]
    adequate = not failed_to_run and all(r.passed for r in results)
    return AdequacyReport(
        normality=normality,
        zero_mean=zero_mean,
        autocorrelation=autocorrelation,
        variance=variance,
        adequate=adequate,
        notes=tuple(notes),
    )

"""
Oracle suite behind the `selftest` command: closed-form values for the
distribution functions, hand-computed cases for each residual criterion,
a full decomposition of the canonical three-peak spectrum, and a
Monte-Carlo check that correctly specified fits pass the battery
at roughly the expected rate.
"""
import math
from dataclasses import dataclass
from typing import Callable, List, Tuple

import numpy as np
from scipy import special
from tqdm import tqdm

from debye import components_to_params, make_component
from diagnostics import (
    anderson_darling_test,
    assess_adequacy,
    durbin_watson_test,
    f_cdf,
    normal_cdf,
    one_sample_t_test,
    t_cdf,
    variance_f_test,
)
from decomposer import decompose
from inmemory_repository import InMemorySpectrumRepository
from models import DecompositionConfig, DecompositionStatus, DiagnosticsSettings, DofMode
from optimizer import fit
from synth import CANONICAL_PEAKS, canonical_spec, generate, synthesize

ORACLE_POINTS = np.linspace(-4.0, 5.5, 20)
MIN_PASS_RATE = 0.6


@dataclass(frozen=True)
class OracleOutcome:
    name: str
    passed: bool
    detail: str


def _max_error(pairs) -> float:
    return max(abs(a - b) for a, b in pairs)


def _check_normal_cdf() -> Tuple[bool, str]:
    symmetry = _max_error((normal_cdf(x) + normal_cdf(-x), 1.0) for x in ORACLE_POINTS)
    erfc_error = _max_error((normal_cdf(x), 0.5 * math.erfc(-x / math.sqrt(2.0))) for x in ORACLE_POINTS)
    quantile = abs(normal_cdf(1.959964) - 0.975)
    ok = normal_cdf(0.0) == 0.5 and symmetry < 1e-12 and erfc_error < 1e-12 and quantile < 1e-6
    return ok, f"symmetry {symmetry:.1e}, erfc {erfc_error:.1e}, q975 {quantile:.1e}"


def _check_t_cdf() -> Tuple[bool, str]:
    cauchy = _max_error((t_cdf(x, 1), 0.5 + math.atan(x) / math.pi) for x in ORACLE_POINTS)
    two_dof = _max_error((t_cdf(x, 2), 0.5 + x / (2.0 * math.sqrt(2.0 + x * x))) for x in ORACLE_POINTS)
    limit = abs(t_cdf(1.96, 10 ** 6) - normal_cdf(1.96))
    ok = cauchy < 1e-10 and two_dof < 1e-10 and limit < 1e-5 and t_cdf(0.0, 7) == 0.5
    return ok, f"df=1 {cauchy:.1e}, df=2 {two_dof:.1e}, df=1e6 {limit:.1e}"


def _check_f_cdf() -> Tuple[bool, str]:
    points = np.abs(ORACLE_POINTS)
    two_two = _max_error((f_cdf(x, 2, 2), x / (1.0 + x)) for x in points)
    two_d = _max_error((f_cdf(x, 2, 9), 1.0 - (1.0 + 2.0 * x / 9.0) ** -4.5) for x in points)
    median = max(abs(f_cdf(1.0, d, d) - 0.5) for d in (1, 5, 30, 194))
    ok = two_two < 1e-10 and two_d < 1e-10 and median < 1e-12 and f_cdf(0.0, 3, 4) == 0.0
    return ok, f"F(2,2) {two_two:.1e}, F(2,9) {two_d:.1e}, median {median:.1e}"


def _check_anderson_darling() -> Tuple[bool, str]:
    n = 50
    quantiles = special.ndtri((np.arange(1, n + 1) - 0.375) / (n + 0.25))
    normal_like = anderson_darling_test(quantiles)
    uniform_like = anderson_darling_test(np.linspace(0.0, 1.0, 4 * n))
    shifted = anderson_darling_test(3.5 * quantiles - 2.0)
    invariance = abs(shifted.p_value - normal_like.p_value)
    ok = normal_like.p_value > 0.99 and uniform_like.p_value < 0.05 and invariance < 1e-12
    return ok, f"quantiles p={normal_like.p_value:.4f}, uniform p={uniform_like.p_value:.4f}"


def _check_t_test() -> Tuple[bool, str]:
    balanced = one_sample_t_test([-2.0, -1.0, 1.0, 2.0])
    small = one_sample_t_test([1.0, 2.0, 3.0])
    expected_p = 1.0 - math.sqrt(6.0 / 7.0)
    ok = (
        balanced.statistic == 0.0 and balanced.p_value == 1.0
        and abs(small.statistic - 2.0 * math.sqrt(3.0)) < 1e-12
        and abs(small.p_value - expected_p) < 1e-10
    )
    return ok, f"t={small.statistic:.6f}, p={small.p_value:.6f}"


def _check_durbin_watson() -> Tuple[bool, str]:
    result = durbin_watson_test([1.0, -1.0, 1.0, -1.0], [1.0, 2.0, 2.0, 1.0], max_lag=2, reps=200, seed=1)
    d1, d2 = result.lags[0].statistic, result.lags[1].statistic
    ok = abs(d1 - 3.0) < 1e-12 and abs(d2) < 1e-12
    return ok, f"d1={d1:.6f}, d2={d2:.6f}"


def _check_variance() -> Tuple[bool, str]:
    result = variance_f_test([1.0, -1.0, 1.0, -1.0], 4.0 / 3.0, 1)
    ok = abs(result.statistic - 1.0) < 1e-12 and abs(result.p_value - 0.5) < 1e-12
    return ok, f"F={result.statistic:.6f}, p={result.p_value:.6f}"


def _check_canonical_decomposition() -> Tuple[bool, str]:
    repository = InMemorySpectrumRepository.from_synthetic(generate(canonical_spec()), "canonical spectrum")
    try:
        result = decompose(repository.load(), DecompositionConfig(frequency=1.0))
    finally:
        repository.close()
    if result.status is not DecompositionStatus.ADEQUATE:
        return False, f"{repository.describe()}: no adequate model in {len(result.attempts)} attempts"

    fit_result = result.accepted.fit
    order = np.argsort(fit_result.peak_temperatures)
    t_error = np.max(np.abs(fit_result.peak_temperatures[order] - [t for _, t in CANONICAL_PEAKS]))
    q_error = np.max(np.abs(fit_result.amplitudes[order] / [q for q, _ in CANONICAL_PEAKS] - 1.0))
    ok = result.accepted.n_components == len(CANONICAL_PEAKS) and t_error < 2.0 and q_error < 0.03
    return ok, f"n={result.accepted.n_components}, T0 error {t_error:.3f} K, Q0 error {q_error:.2%}"


def false_positive_rate(
rounds: int = 100, frequency: float = 1.0, show_progress: bool = False) -> float:
    """Share of correctly specified single-peak fits that the battery accepts."""
    truth = [make_component(1.0, 550.0, frequency)]
    start = components_to_params(truth)
    accepted = 0
    for seed in tqdm(range(rounds), desc="False-positive check", disable=not show_progress):
        spectrum = synthesize(truth, (400.0, 700.0), 200, 0.01, frequency, seed=seed).spectrum
        result = fit(spectrum, start, frequency)
        settings = DiagnosticsSettings(alpha=0.05, seed=seed)
        report = assess_adequacy(result, spectrum, DofMode.CORRECTED.free_parameters(1), settings)
        accepted += report.adequate
    return accepted / rounds


def run_selftest(rounds: int = 100, show_progress: bool = False) -> List[OracleOutcome]:
    checks: List[Tuple[str, Callable[[], Tuple[bool, str]]]] = [
        ("normal_cdf", _check_normal_cdf),
        ("t_cdf", _check_t_cdf),
        ("f_cdf", _check_f_cdf),
        ("anderson_darling", _check_anderson_darling),
        ("t_test", _check_t_test),
        ("durbin_watson", _check_durbin_watson),
        ("variance_f", _check_variance),
        ("canonical_decomposition", _check_canonical_decomposition),
    ]
    outcomes = []
    for name, check in checks:
        try:
            passed, detail = check()
        except Exception as exc:  # a crashing oracle is a failed oracle
            passed, detail = False, f"{type(exc).__name__}: {exc}"
        outcomes.append(OracleOutcome(name, bool(passed), detail))

    if rounds > 0:
        rate = false_positive_rate(rounds, show_progress=show_progress)
        outcomes.append(OracleOutcome(
            "false_positive_control", rate >= MIN_PASS_RATE, f"{rate:.0%} of {rounds} adequate fits accepted"
        ))
    return outcomes

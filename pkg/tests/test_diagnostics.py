import unittest

import numpy as np
from scipy import stats

from diagnostics import (
    _anderson_darling_p_value,
    anderson_darling_test,
    assess_adequacy,
    durbin_watson_test,
    f_cdf,
    normal_cdf,
    one_sample_t_test,
    t_cdf,
    variance_f_test,
)
from exceptions import DiagnosticPreconditionError, ModelDomainError
from models import DiagnosticsSettings, FitResult, Spectrum, TerminationReason

POINTS = np.linspace(-4.0, 5.5, 20)


def fixture_samples():
    """Ten seeded residual-like samples of varying size and shape."""
    rng = np.random.default_rng(7)
    samples = [rng.normal(0.0, 0.01, size) for size in (8, 12, 25, 50, 100, 400)]
    samples.append(rng.standard_t(3, 60))
    samples.append(rng.exponential(1.0, 40) - 1.0)
    samples.append(rng.uniform(-1.0, 1.0, 30))
    samples.append(rng.normal(0.3, 2.0, 15))
    return samples


def reference_ad_p_value(a2, n):
    """Composite-normal Anderson-Darling p-value as published for R's nortest::ad.test."""
    z = a2 * (1.0 + 0.75 / n + 2.25 / n ** 2)
    if z < 0.2:
        return 1.0 - np.exp(-13.436 + 101.14 * z - 223.73 * z ** 2)
    if z < 0.34:
        return 1.0 - np.exp(-8.318 + 42.796 * z - 59.938 * z ** 2)
    if z < 0.6:
        return np.exp(0.9177 - 4.279 * z - 1.38 * z ** 2)
    if z < 10.0:
        return np.exp(1.2937 - 5.709 * z + 0.0186 * z ** 2)
    return 3.7e-24


class TestDistributionFunctions(unittest.TestCase):

    def test_normal_cdf(self):
        for x in POINTS:
            self.assertAlmostEqual(normal_cdf(x), stats.norm.cdf(x), places=14)
        self.assertEqual(normal_cdf(0.0), 0.5)

    def test_t_cdf(self):
        for df in (1, 2, 3, 7, 30, 194):
            for x in POINTS:
                self.assertAlmostEqual(t_cdf(x, df), stats.t.cdf(x, df), places=12, msg=f"df={df}, x={x}")

    def test_t_cdf_infinite_argument(self):
        self.assertEqual(t_cdf(float("inf"), 4), 1.0)
        self.assertEqual(t_cdf(float("-inf"), 4), 0.0)

    def test_f_cdf(self):
        for d1, d2 in ((1, 1), (2, 9), (5, 30), (194, 194)):
            for x in np.abs(POINTS):
                self.assertAlmostEqual(f_cdf(x, d1, d2), stats.f.cdf(x, d1, d2), places=12,
                                       msg=f"d=({d1},{d2}), x={x}")

    def test_domain_errors(self):
        with self.assertRaises(ModelDomainError):
            t_cdf(1.0, 0.5)
        with self.assertRaises(ModelDomainError):
            f_cdf(-0.1, 2, 2)
        with self.assertRaises(ModelDomainError):
            f_cdf(1.0, 0, 2)


class TestAndersonDarling(unittest.TestCase):

    def test_statistic_matches_reference(self):
        for sample in fixture_samples():
            result = anderson_darling_test(sample)
            reference = stats.anderson(sample, dist="norm").statistic
            self.assertAlmostEqual(result.statistic, reference, delta=1e-6 * max(1.0, reference))

    def test_p_value_matches_reference(self):
        for sample in fixture_samples():
            result = anderson_darling_test(sample)
            expected = reference_ad_p_value(stats.anderson(sample, dist="norm").statistic, sample.size)
            self.assertAlmostEqual(result.p_value, expected, delta=1e-4, msg=f"n={sample.size}")
            self.assertEqual(result.passed, result.p_value >= 0.05)

    def test_p_value_at_known_critical_points(self):
        # corrected A*^2 critical values of the composite normal test
        self.assertAlmostEqual(_anderson_darling_p_value(0.752), 0.05, delta=0.002)
        self.assertAlmostEqual(_anderson_darling_p_value(1.035), 0.01, delta=0.001)
        self.assertEqual(_anderson_darling_p_value(12.0), 3.7e-24)

    def test_p_value_nearly_continuous_across_branches(self):
        for edge in (0.2, 0.34, 0.6):
            gap = abs(_anderson_darling_p_value(edge - 1e-9) - _anderson_darling_p_value(edge))
            self.assertLess(gap, 0.01)

    def test_normal_and_uniform_samples(self):
        quantiles = stats.norm.ppf((np.arange(1, 51) - 0.375) / 50.25)
        self.assertTrue(anderson_darling_test(quantiles).passed)
        uniform = anderson_darling_test(np.linspace(0.0, 1.0, 200))
        self.assertLess(uniform.p_value, 0.01)
        self.assertFalse(uniform.passed)

    def test_affine_invariance(self):
        sample = fixture_samples()[3]
        base = anderson_darling_test(sample)
        moved = anderson_darling_test(250.0 * sample + 17.0)
        self.assertAlmostEqual(base.statistic, moved.statistic, places=9)
        self.assertAlmostEqual(base.p_value, moved.p_value, places=9)

    def test_preconditions(self):
        with self.assertRaises(DiagnosticPreconditionError):
            anderson_darling_test(np.arange(7.0))
        with self.assertRaises(DiagnosticPreconditionError):
            anderson_darling_test(np.ones(20))


class TestOneSampleT(unittest.TestCase):

    def test_matches_reference(self):
        for sample in fixture_samples():
            result = one_sample_t_test(sample)
            reference = stats.ttest_1samp(sample, 0.0)
            self.assertAlmostEqual(result.statistic, reference.statistic, delta=1e-6 * max(1.0, abs(reference.statistic)))
            self.assertAlmostEqual(result.p_value, reference.pvalue, delta=1e-4)

    def test_hand_computed(self):
        result = one_sample_t_test([1.0, 2.0, 3.0])
        self.assertAlmostEqual(result.statistic, 2.0 * np.sqrt(3.0), places=12)
        self.assertAlmostEqual(result.p_value, 1.0 - np.sqrt(6.0 / 7.0), places=10)

        symmetric = one_sample_t_test([-2.0, -1.0, 1.0, 2.0])
        self.assertEqual(symmetric.statistic, 0.0)
        self.assertEqual(symmetric.p_value, 1.0)
        self.assertTrue(symmetric.passed)


class TestDurbinWatson(unittest.TestCase):

    def test_hand_computed_statistics(self):
        result = durbin_watson_test([1.0, -1.0, 1.0, -1.0], [1.0, 2.0, 2.0, 1.0], max_lag=2, reps=200, seed=1)
        self.assertEqual(result.max_lag, 2)
        self.assertAlmostEqual(result.lags[0].statistic, 3.0, places=12)
        self.assertAlmostEqual(result.lags[1].statistic, 0.0, places=12)

    def test_matches_reference_on_ols_residuals(self):
        """Lag-1 statistic equals the textbook d of the OLS residuals."""
        rng = np.random.default_rng(11)
        x = np.linspace(400.0, 700.0, 80)
        y = rng.normal(size=80)
        ols = stats.linregress(x, y)
        inner = y - (ols.intercept + ols.slope * x)
        expected = np.sum(np.diff(inner) ** 2) / np.sum(inner ** 2)
        result = durbin_watson_test(y, x, max_lag=1, reps=100)
        self.assertAlmostEqual(result.lags[0].statistic, expected, places=9)

    def test_smooth_residuals_are_flagged(self):
        x = np.linspace(400.0, 700.0, 200)
        residuals = 0.01 * np.sin(x / 15.0)
        result = durbin_watson_test(residuals, x, max_lag=5, reps=500, seed=3)
        self.assertFalse(result.passed)
        self.assertEqual(result.lags[0].p_value, 0.0)

    def test_deterministic_for_fixed_seed(self):
        rng = np.random.default_rng(5)
        x = np.linspace(400.0, 700.0, 100)
        e = rng.normal(size=100)
        first = durbin_watson_test(e, x, seed=9)
        second = durbin_watson_test(e, x, seed=9)
        self.assertEqual(first, second)
        for lag in first.lags:
            self.assertGreaterEqual(lag.p_value, 0.0)
            self.assertLessEqual(lag.p_value, 1.0)

    def test_preconditions(self):
        with self.assertRaises(DiagnosticPreconditionError):
            durbin_watson_test([1.0, 2.0, 3.0], [1.0, 2.0], max_lag=1)
        with self.assertRaises(DiagnosticPreconditionError):
            durbin_watson_test(np.arange(5.0), np.arange(5.0), max_lag=5)


class TestVarianceF(unittest.TestCase):

    def test_hand_computed(self):
        result = variance_f_test([1.0, -1.0, 1.0, -1.0], 4.0 / 3.0, 1)
        self.assertAlmostEqual(result.statistic, 1.0, places=12)
        self.assertAlmostEqual(result.p_value, 0.5, places=12)

    def test_matches_reference(self):
        rng = np.random.default_rng(13)
        for sd in (0.8, 1.0, 1.3):
            e = rng.normal(0.0, sd, 100)
            dof = 100 - 4
            var_res = np.sum((e - e.mean()) ** 2) / dof
            expected = max(var_res, 1.0) / min(var_res, 1.0)
            result = variance_f_test(e, 1.0, 4)
            self.assertAlmostEqual(result.statistic, expected, places=10)
            self.assertAlmostEqual(result.p_value, stats.f.sf(expected, dof, dof), delta=1e-4)

    def test_zero_residual_variance(self):
        result = variance_f_test(np.zeros(10), 1e-4, 2)
        self.assertEqual(result.statistic, float("inf"))
        self.assertEqual(result.p_value, 0.0)
        self.assertFalse(result.passed)

    def test_preconditions(self):
        with self.assertRaises(DiagnosticPreconditionError):
            variance_f_test([1.0, -1.0, 1.0], 1.0, 3)
        with self.assertRaises(DiagnosticPreconditionError):
            variance_f_test([1.0, -1.0, 1.0], 0.0, 1)


class TestAssessAdequacy(unittest.TestCase):

    def make_fit(self, residuals):
        return FitResult(
            params=np.array([1.0, 500.0]),
            residuals=residuals,
            sse=float(np.sum(np.square(residuals))),
            iterations=3,
            converged=True,
            termination_reason=TerminationReason.SSE,
        )

    def test_all_four_criteria(self):
        rng = np.random.default_rng(21)
        residuals = rng.normal(0.0, 0.01, 200)
        spectrum = Spectrum(np.linspace(400.0, 700.0, 200), np.ones(200), var_eps=1e-4)
        report = assess_adequacy(self.make_fit(residuals), spectrum, 2, DiagnosticsSettings())
        for test in (report.normality, report.zero_mean, report.autocorrelation, report.variance):
            self.assertIsNotNone(test)
        passed = all(t.passed for t in (report.normality, report.zero_mean, report.autocorrelation, report.variance))
        self.assertEqual(report.adequate, passed)

    def test_variance_skipped_without_var_eps(self):
        rng = np.random.default_rng(22)
        spectrum = Spectrum(np.linspace(400.0, 700.0, 100), np.ones(100))
        with self.assertLogs("diagnostics", level="WARNING"):
            report = assess_adequacy(self.make_fit(rng.normal(0.0, 0.01, 100)), spectrum, 2)
        self.assertIsNone(report.variance)
        self.assertTrue(any("variance" in note for note in report.notes))

    def test_precondition_failure_makes_report_inadequate(self):
        spectrum = Spectrum(np.linspace(400.0, 700.0, 6), np.ones(6), var_eps=1e-4)
        report = assess_adequacy(self.make_fit(np.array([0.1, -0.2, 0.05, 0.3, -0.1, 0.0])), spectrum, 2)
        self.assertIsNone(report.normality)
        self.assertFalse(report.adequate)
        self.assertTrue(any(note.startswith("normality") for note in report.notes))


if __name__ == "__main__":
    unittest.main()

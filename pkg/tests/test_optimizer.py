import unittest

import numpy as np

from debye import evaluate, make_component
from exceptions import DimensionMismatchError
from models import LMOptions, SolverMethod, Spectrum, TerminationReason
from optimizer import LevenbergMarquardtFitter, fit, sum_squared_residuals
from synth import CANONICAL_PEAKS, CANONICAL_POINTS, CANONICAL_RANGE, canonical_spec, generate, synthesize


def noise_free_spectrum(params, frequency=1.0, t_range=(300.0, 800.0), points=200):
    grid = np.linspace(*t_range, points)
    return Spectrum(grid, evaluate(grid, params, frequency))


class TestLevenbergMarquardt(unittest.TestCase):

    def test_recovers_single_peak_from_perturbed_starts(self):
        """Noise-free data, every start 20% off in both parameters."""
        truth = np.array([1.0, 550.0])
        spectrum = noise_free_spectrum(truth)
        for q_factor in (0.8, 1.2):
            for t_factor in (0.8, 1.2):
                start = truth * [q_factor, t_factor]
                result = fit(spectrum, start, 1.0)
                self.assertTrue(result.converged, msg=f"start {start}")
                np.testing.assert_allclose(result.params, truth, rtol=1e-8)

    def test_recovers_two_peaks(self):
        truth = np.array([1.0, 0.6, 500.0, 620.0])
        spectrum = noise_free_spectrum(truth)
        result = fit(spectrum, [0.9, 0.5, 490.0, 630.0], 1.0)
        self.assertTrue(result.converged)
        np.testing.assert_allclose(result.params, truth, rtol=1e-6)

    def test_gauss_newton_variant(self):
        truth = np.array([1.0, 550.0])
        spectrum = noise_free_spectrum(truth)
        options = LMOptions(method=SolverMethod.GAUSS_NEWTON)
        result = fit(spectrum, [0.9, 540.0], 1.0, options)
        self.assertTrue(result.converged)
        np.testing.assert_allclose(result.params, truth, rtol=1e-6)

    def test_sse_never_increases_over_start(self):
        truth = [make_component(1.0, 550.0, 1.0)]
        spectrum = synthesize(truth, (400.0, 700.0), 200, 0.01, 1.0, seed=3).spectrum
        start = np.array([0.7, 600.0])
        result = fit(spectrum, start, 1.0)
        self.assertLessEqual(result.sse, sum_squared_residuals(spectrum, start, 1.0))

    def test_result_invariants(self):
        truth = [make_component(1.0, 550.0, 1.0)]
        spectrum = synthesize(truth, (400.0, 700.0), 200, 0.01, 1.0, seed=5).spectrum
        result = fit(spectrum, [1.1, 560.0], 1.0)

        expected = spectrum.intensities - evaluate(spectrum.temperatures, result.params, 1.0)
        np.testing.assert_allclose(result.residuals, expected, atol=1e-12)
        self.assertAlmostEqual(result.sse, float(np.sum(result.residuals ** 2)), places=12)
        self.assertEqual(result.n_components, 1)
        self.assertIsInstance(result.termination_reason, TerminationReason)
        self.assertEqual(result.converged, result.termination_reason is not TerminationReason.MAX_ITERATIONS)

    def test_peak_temperatures_stay_in_clamp_window(self):
        spectrum = noise_free_spectrum([1.0, 550.0], t_range=(400.0, 700.0))
        result = fit(spectrum, [1.0, 10000.0], 1.0)
        self.assertTrue(np.all(result.peak_temperatures >= 200.0))
        self.assertTrue(np.all(result.peak_temperatures <= 1400.0))

    def test_iteration_cap(self):
        spectrum = noise_free_spectrum([1.0, 0.6, 500.0, 620.0])
        fitter = LevenbergMarquardtFitter(LMOptions(max_iterations=1))
        result = fitter.fit(spectrum, [0.5, 0.3, 450.0, 700.0], 1.0)
        self.assertEqual(result.iterations, 1)
        self.assertFalse(result.converged)
        self.assertEqual(result.termination_reason, TerminationReason.MAX_ITERATIONS)

    def test_too_few_points(self):
        spectrum = noise_free_spectrum([1.0, 550.0], points=4)
        with self.assertRaises(DimensionMismatchError):
            fit(spectrum, [1.0, 0.5, 500.0, 600.0], 1.0)


class TestCanonicalSpectrumFits(unittest.TestCase):
    """Three peaks at 450, 550 and 650 K on the canonical grid."""

    def setUp(self):
        self.truth = np.array([q for q, _ in CANONICAL_PEAKS] + [t for _, t in CANONICAL_PEAKS])
        self.noisy = generate(canonical_spec(seed=42)).spectrum

    def test_exact_start_stops_immediately(self):
        spectrum = noise_free_spectrum(self.truth, t_range=CANONICAL_RANGE, points=CANONICAL_POINTS)
        result = fit(spectrum, self.truth, 1.0)
        self.assertLessEqual(result.iterations, 2)
        self.assertIn(result.termination_reason, (TerminationReason.GRADIENT, TerminationReason.SSE))
        np.testing.assert_allclose(result.params, self.truth, rtol=1e-12)

    def test_recovers_peak_temperatures_from_scattered_starts(self):
        rng = np.random.default_rng(0)
        truth_t = self.truth[3:]
        for _ in range(20):
            start = np.concatenate([
                self.truth[:3] * rng.uniform(0.7, 1.3, 3),
                truth_t + rng.uniform(-30.0, 30.0, 3),
            ])
            result = fit(self.noisy, start, 1.0)
            self.assertTrue(result.converged, msg=f"start {start}")
            np.testing.assert_allclose(np.sort(result.peak_temperatures), truth_t, atol=2.0,
                                       err_msg=f"start {start}")

    def test_component_order_does_not_matter(self):
        start = np.array([0.9, 1.1, 1.0, 460.0, 540.0, 655.0])
        order = np.array([2, 0, 1])
        permuted = np.concatenate([start[:3][order], start[3:][order]])

        direct = fit(self.noisy, start, 1.0)
        shuffled = fit(self.noisy, permuted, 1.0)

        np.testing.assert_allclose(shuffled.amplitudes, direct.amplitudes[order], atol=1e-6)
        np.testing.assert_allclose(shuffled.peak_temperatures, direct.peak_temperatures[order], atol=1e-5)
        self.assertAlmostEqual(shuffled.sse, direct.sse, places=10)

    def test_repeated_fits_are_bit_identical(self):
        start = [0.9, 1.1, 1.0, 460.0, 540.0, 655.0]
        first = fit(self.noisy, start, 1.0)
        second = fit(self.noisy, start, 1.0)
        np.testing.assert_array_equal(first.params, second.params)
        np.testing.assert_array_equal(first.residuals, second.residuals)
        self.assertEqual(first.sse, second.sse)
        self.assertEqual(first.iterations, second.iterations)


class TestSumSquaredResiduals(unittest.TestCase):

    def test_zero_amplitudes_leave_the_data(self):
        spectrum = generate(canonical_spec(seed=42)).spectrum
        sse = sum_squared_residuals(spectrum, [0.0, 0.0, 0.0, 450.0, 550.0, 650.0], 1.0)
        self.assertEqual(sse, float(np.sum(spectrum.intensities ** 2)))

    def test_pinned_value(self):
        """Below 25 K the 500 K peak is past the cosh overflow guard and contributes exactly zero."""
        spectrum = Spectrum([5.0, 10.0, 15.0, 20.0, 500.0], [0.1, -0.2, 0.3, 0.05, 1.25])
        sse = sum_squared_residuals(spectrum, [1.0, 500.0], 1.0)
        self.assertAlmostEqual(sse, 0.205, places=15)


class TestLMOptions(unittest.TestCase):

    def test_defaults(self):
        options = LMOptions()
        self.assertEqual(options.max_iterations, 200)
        self.assertEqual(options.initial_damping, 1e-3)
        self.assertEqual(options.method, SolverMethod.LEVENBERG_MARQUARDT)

    def test_method_from_string(self):
        self.assertIs(LMOptions(method="gauss_newton").method, SolverMethod.GAUSS_NEWTON)

    def test_invalid_values(self):
        with self.assertRaises(ValueError):
            LMOptions(max_iterations=0)
        with self.assertRaises(ValueError):
            LMOptions(damping_decrease=1.5)
        with self.assertRaises(ValueError):
            LMOptions(gradient_tolerance=0.0, step_tolerance=0.0, sse_tolerance=0.0)


if __name__ == "__main__":
    unittest.main()

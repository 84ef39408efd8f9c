import unittest

from selftest import MIN_PASS_RATE, false_positive_rate, run_selftest


class TestSelftest(unittest.TestCase):

    def test_oracles_pass(self):
        outcomes = run_selftest(rounds=0)
        failed = [f"{o.name}: {o.detail}" for o in outcomes if not o.passed]
        self.assertEqual(failed, [])
        names = [o.name for o in outcomes]
        self.assertIn("canonical_decomposition", names)
        self.assertNotIn("false_positive_control", names)

    def test_false_positive_control(self):
        """Correctly specified fits pass the whole battery in most seeded runs."""
        rate = false_positive_rate(rounds=100)
        self.assertGreaterEqual(rate, MIN_PASS_RATE)
        self.assertLess(rate, 1.0)


if __name__ == "__main__":
    unittest.main()

"""
Tests for the linearized stability subsystems and the Routh-Hurwitz check.
"""
import math

import numpy as np
from django.test import SimpleTestCase

from cascade.analytic import Regime, steady_state, thresholds
from cascade.exceptions import NoConvergence, WrongRegime
from cascade.params import from_dimensionless
from cascade.stability import (
    analyze,
    below_threshold_matrix,
    characteristic_cubic,
    classify_eigenvalues,
    eigenvalues_dense,
    full_jacobian_spectrum,
    phase_diffusion_rates,
    regime2_subsystems,
    regime3_subsystems,
    routh_hurwitz_cubic,
    second_threshold_by_bisection,
)


class EigenvalueTests(SimpleTestCase):

    def test_sorted_by_real_part(self):
        values = eigenvalues_dense(np.diag([3.0, -1.0, 0.5]))
        np.testing.assert_allclose(values.real, [-1.0, 0.5, 3.0])

    def test_non_finite_matrix(self):
        with self.assertRaises(NoConvergence):
            eigenvalues_dense(np.array([[np.nan, 0.0], [0.0, 1.0]]))

    def test_classify(self):
        self.assertEqual(classify_eigenvalues(np.array([-1.0, -0.5])), (True, False))
        self.assertEqual(classify_eigenvalues(np.array([-1.0, 0.0])), (False, True))
        self.assertEqual(classify_eigenvalues(np.array([-1.0, 0.1])), (False, False))


class BelowThresholdTests(SimpleTestCase):

    def test_spectrum(self):
        """Eigenvalues are -1 +/- eps, each twice."""
        for eps in (0.1, 0.5, 0.9, 0.999):
            values = eigenvalues_dense(below_threshold_matrix(eps).matrix)
            np.testing.assert_allclose(np.sort(values.real), [-1 - eps, -1 - eps, -1 + eps, -1 + eps], atol=1e-12)
            np.testing.assert_allclose(values.imag, 0.0, atol=1e-12)

    def test_negative_eps_rejected(self):
        with self.assertRaises(ValueError):
            below_threshold_matrix(-0.1)


class RouthHurwitzTests(SimpleTestCase):

    def test_known_cubics(self):
        # (l + 1)(l + 2)(l + 3)
        self.assertTrue(routh_hurwitz_cubic((6.0, 11.0, 6.0)))
        # (l - 1)(l + 2)(l + 3)
        self.assertFalse(routh_hurwitz_cubic((4.0, 1.0, -6.0)))
        self.assertTrue(routh_hurwitz_cubic((2.0, 12.0, 22.0, 12.0)))

    def test_agrees_with_eigenvalues(self):
        rng = np.random.default_rng(4)
        for _ in range(200):
            matrix = rng.normal(size=(3, 3))
            expected = bool(np.max(np.linalg.eigvals(matrix).real) < 0)
            self.assertEqual(routh_hurwitz_cubic(characteristic_cubic(matrix)), expected)


class RegimeSubsystemTests(SimpleTestCase):

    def test_regime2_stable_between_thresholds(self):
        sol = steady_state(from_dimensionless(g=0.5, gamma_r=10.0, epsilon=1.05))
        for subsystem in regime2_subsystems(sol):
            self.assertLess(np.max(eigenvalues_dense(subsystem.matrix).real), 0, subsystem.name)

    def test_regime_mismatch(self):
        sol = steady_state(from_dimensionless(g=0.5, gamma_r=10.0, epsilon=0.5))
        with self.assertRaises(WrongRegime):
            regime2_subsystems(sol)
        with self.assertRaises(WrongRegime):
            phase_diffusion_rates(sol)

    def test_regime3_warns_without_adiabatic_pump(self):
        """gamma0/gamma below the minimum only logs a warning."""
        sol = steady_state(from_dimensionless(g=0.5, gamma_r=2.0, epsilon=3.0))
        with self.assertLogs('cascade.stability', level='WARNING'):
            subsystems = regime3_subsystems(sol)
        self.assertEqual(len(subsystems), 3)

    def test_second_threshold_by_bisection(self):
        """The tilde-alpha block goes unstable exactly at the closed-form second threshold."""
        for gamma_r in (5.0, 10.0, 50.0):
            p = from_dimensionless(g=0.5, gamma_r=gamma_r, epsilon=0.5)
            found = second_threshold_by_bisection(p)
            self.assertLess(abs(found - thresholds(p)[1]) / thresholds(p)[1], 1e-8)


class PhaseDiffusionTests(SimpleTestCase):

    def test_regime2_rate(self):
        p = from_dimensionless(g=0.5, gamma_r=10.0, epsilon=1.05)
        sol = steady_state(p)
        n0, n1, n2 = sol.intensities[:3]
        (phase,) = phase_diffusion_rates(sol)
        self.assertEqual(phase.symbol, 'phi1-phi2')
        self.assertAlmostEqual(phase.rate, 0.5 * math.sqrt(n0) / math.sqrt(n1 * n2))

    def test_regime3_rates(self):
        sol = steady_state(from_dimensionless(g=0.1, gamma_r=10.0, epsilon=1.5))
        rates = {phase.symbol: phase.rate for phase in phase_diffusion_rates(sol)}
        self.assertEqual(set(rates), {'phi1-phi2', 'phi3-phi4'})
        self.assertAlmostEqual(rates['phi3-phi4'], 1.0 / sol.intensities[3])


class AnalyzeTests(SimpleTestCase):

    def test_below_threshold_report(self):
        report = analyze(from_dimensionless(g=0.5, gamma_r=10.0, epsilon=0.8))
        self.assertEqual(report.regime, Regime.BELOW_THRESHOLD)
        self.assertTrue(report.overall_stable)
        self.assertAlmostEqual(report.max_real_part, -0.2)

    def test_marginal_report_is_empty(self):
        report = analyze(from_dimensionless(g=0.5, gamma_r=10.0, epsilon=1.0))
        self.assertEqual(report.regime, Regime.MARGINAL)
        self.assertTrue(report.marginal)
        self.assertFalse(report.overall_stable)

    def test_regime3_report_lists_free_phases(self):
        report = analyze(from_dimensionless(g=0.1, gamma_r=10.0, epsilon=1.5))
        self.assertEqual(report.regime, Regime.SECOND_ABOVE)
        symbols = [phase.symbol for phase in report.diffusing_phases]
        self.assertEqual(symbols, ['phi1-phi2', 'phi3-phi4', 'phi3+phi4'])

    def test_full_jacobian_has_zero_modes(self):
        """Each free phase shows up as a zero eigenvalue of the full Jacobian."""
        p = from_dimensionless(g=0.5, gamma_r=10.0, epsilon=1.05)
        values = full_jacobian_spectrum(steady_state(p), p)
        self.assertEqual(int(np.sum(np.abs(values) < 1e-9)), 1)

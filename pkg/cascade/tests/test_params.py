"""
Tests for parameter validation, dimensionless conversion, thresholds and settings access.
"""
import math

from django.core.exceptions import ImproperlyConfigured
from django.test import SimpleTestCase, override_settings

from cascade.conf import opo_setting
from cascade.exceptions import AsymmetricParams, NegativeCoupling, NonPositiveLossRate, ParameterError
from cascade.params import (
    Coefficients,
    Representation,
    SystemParams,
    Topology,
    component_count,
    from_dimensionless,
    general_thresholds,
    is_symmetric,
    symmetric_rates,
    to_dimensionless,
    validate_params,
)


def make_params(**overrides):
    values = {
        'gamma': (2.0, 1.0, 1.0, 1.0, 1.0),
        'chi1': 0.5,
        'chi2': 0.5,
        'drive': 1.0,
    }
    values.update(overrides)
    return SystemParams(**values)


class ValidateParamsTests(SimpleTestCase):

    # --- Physical invariants ---
    def test_valid_params_returned_unchanged(self):
        """A positive, finite parameter set passes through untouched."""
        p = make_params()
        self.assertIs(validate_params(p), p)

    def test_zero_loss_rate_rejected(self):
        """A zero loss rate raises NonPositiveLossRate naming the mode."""
        with self.assertRaises(NonPositiveLossRate) as ctx:
            validate_params(make_params(gamma=(2.0, 1.0, 0.0, 1.0, 1.0)))
        self.assertEqual(ctx.exception.index, 2)
        self.assertEqual(ctx.exception.code, 'non_positive_loss_rate')

    def test_nan_loss_rate_rejected(self):
        with self.assertRaises(NonPositiveLossRate):
            validate_params(make_params(gamma=(math.nan, 1.0, 1.0, 1.0, 1.0)))

    def test_negative_coupling_rejected(self):
        """chi2 < 0 raises NegativeCoupling."""
        with self.assertRaises(NegativeCoupling) as ctx:
            validate_params(make_params(chi2=-0.1))
        self.assertEqual(ctx.exception.name, 'chi2')

    def test_infinite_drive_rejected(self):
        with self.assertRaises(ParameterError):
            validate_params(make_params(drive=complex(math.inf, 0.0)))

    def test_degenerate_requires_equal_signal_rates(self):
        """The degenerate cascade identifies modes 1, 3, 4, so their rates must agree."""
        with self.assertRaises(ParameterError) as ctx:
            validate_params(make_params(gamma=(2.0, 1.0, 1.0, 0.5, 1.0), topology=Topology.DEGENERATE))
        self.assertEqual(ctx.exception.code, 'degenerate_mismatch')

    def test_parameter_errors_are_validation_errors(self):
        """Parameter errors carry messages like any Django ValidationError."""
        with self.assertRaises(ParameterError) as ctx:
            validate_params(make_params(gamma=(-1.0, 1.0, 1.0, 1.0, 1.0)))
        self.assertIn("gamma[0]", ctx.exception.messages[0])


class SymmetryTests(SimpleTestCase):

    def test_symmetric_detection(self):
        self.assertTrue(is_symmetric(make_params()))
        self.assertFalse(is_symmetric(make_params(gamma=(2.0, 1.0, 1.1, 1.0, 1.0))))
        self.assertFalse(is_symmetric(make_params(chi2=0.4)))

    def test_symmetric_rates(self):
        """(gamma0, gamma, chi) is read off a symmetric set."""
        self.assertEqual(symmetric_rates(make_params()), (2.0, 1.0, 0.5))

    def test_asymmetric_rates_rejected(self):
        with self.assertRaises(AsymmetricParams):
            symmetric_rates(make_params(chi1=0.3))

    def test_zero_coupling_has_no_symmetric_rates(self):
        with self.assertRaises(AsymmetricParams):
            symmetric_rates(make_params(chi1=0.0, chi2=0.0))


class DimensionlessTests(SimpleTestCase):

    def test_from_dimensionless_builds_symmetric_set(self):
        """g, gamma_r and epsilon fix chi, gamma0 and |E0|."""
        p = from_dimensionless(g=0.5, gamma_r=10.0, epsilon=2.0, gamma=2.0)
        self.assertEqual(p.gamma, (20.0, 2.0, 2.0, 2.0, 2.0))
        self.assertAlmostEqual(p.chi1, 1.0)
        self.assertAlmostEqual(abs(p.drive), 2.0 * 20.0 * 2.0 / 1.0)

    def test_dimensionless_inverse(self):
        p = from_dimensionless(g=0.3, gamma_r=5.0, epsilon=1.7, drive_phase=0.4)
        d = to_dimensionless(p)
        self.assertAlmostEqual(d.g, 0.3)
        self.assertAlmostEqual(d.gamma_r, 5.0)
        self.assertAlmostEqual(d.epsilon, 1.7)
        self.assertAlmostEqual(p.drive_phase, 0.4)


class GeneralThresholdTests(SimpleTestCase):

    def test_reduces_to_symmetric_formula(self):
        """With equal rates the thresholds are (gamma0 gamma/chi)^2 and that times (1 + gamma/gamma0)^2."""
        first, second = general_thresholds(make_params())
        self.assertAlmostEqual(first, (2.0 * 1.0 / 0.5) ** 2)
        self.assertAlmostEqual(second, first * 1.5 ** 2)

    def test_asymmetric_rates(self):
        p = make_params(gamma=(1.0, 0.14, 0.08, 0.14, 0.14), chi1=1.0, chi2=1.0)
        first, second = general_thresholds(p)
        root_first = math.sqrt(0.14 * 0.08)
        self.assertAlmostEqual(first, root_first ** 2)
        expected = root_first + 0.14 * 0.14 * math.sqrt(0.08 / 0.14)
        self.assertAlmostEqual(second, expected ** 2)

    def test_zero_couplings_give_infinite_thresholds(self):
        self.assertEqual(general_thresholds(make_params(chi1=0.0, chi2=0.0)), (math.inf, math.inf))
        first, second = general_thresholds(make_params(chi2=0.0))
        self.assertTrue(math.isfinite(first))
        self.assertEqual(second, math.inf)


class CoefficientTests(SimpleTestCase):

    def test_component_counts(self):
        self.assertEqual(component_count(Representation.CLASSICAL, Topology.NONDEGENERATE), 5)
        self.assertEqual(component_count(Representation.POSITIVE_P, Topology.NONDEGENERATE), 10)
        self.assertEqual(component_count(Representation.POSITIVE_P, Topology.DEGENERATE), 6)

    def test_stack_batches_parameter_sets(self):
        c = Coefficients.stack([make_params(), make_params(drive=2.0)])
        self.assertEqual(c.gamma.shape, (2, 5))
        self.assertEqual(list(c.drive), [1.0, 2.0])

    def test_stack_rejects_mixed_topologies(self):
        degenerate = make_params(topology=Topology.DEGENERATE)
        with self.assertRaises(ParameterError):
            Coefficients.stack([make_params(), degenerate])


class OpoSettingTests(SimpleTestCase):

    def test_reads_and_coerces(self):
        with override_settings(OPO_WORKERS='3'):
            self.assertEqual(opo_setting('OPO_WORKERS'), 3)

    @override_settings(OPO_WORKERS=0)
    def test_rejects_non_positive(self):
        with self.assertRaises(ImproperlyConfigured):
            opo_setting('OPO_WORKERS')

    def test_unknown_setting(self):
        with self.assertRaises(ImproperlyConfigured):
            opo_setting('OPO_NOT_A_SETTING')

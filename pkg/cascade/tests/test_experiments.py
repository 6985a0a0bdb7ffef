"""
Tests for sweeps, phase observables, dynamics classification, perturbations and diffusion fits.
"""
import math

import numpy as np
from django.test import SimpleTestCase, tag

from cascade.analytic import Regime, steady_state, steady_state_vector
from cascade.exceptions import InsufficientEnsemble, InvalidConfig, NotAtSteadyState
from cascade.experiments import (
    DynamicsClass,
    Perturb,
    Scenario,
    default_relaxation_config,
    detect_dynamics_class,
    dominant_frequency,
    drift_norm,
    estimate_diffusion_slope,
    numeric_fixed_point,
    phase_observables,
    run_perturbation,
    threshold_sweep,
    wrap,
)
from cascade.integrate import EnsembleStats, IntegratorConfig, KickTarget, Scheme, Trajectory
from cascade.model import state_for
from cascade.params import Representation, from_dimensionless


def classical_config(**overrides):
    values = {
        'scheme': Scheme.RK4,
        'representation': Representation.CLASSICAL,
        'dt': 0.1,
        't_end': 100.0,
        'record_stride': 1,
    }
    values.update(overrides)
    return IntegratorConfig(**values)


def synthetic_trajectory(pump, p=None):
    """Classical record with the given pump amplitude series and empty signal modes."""
    cfg = classical_config()
    times = np.arange(cfg.n_steps + 1) * cfg.dt
    amplitudes = np.zeros((times.size, 5), dtype=complex)
    amplitudes[:, 0] = pump(times)
    return Trajectory(times, amplitudes, p or from_dimensionless(0.5, 3.0, 0.5), cfg)


class PhaseObservableTests(SimpleTestCase):

    def test_wrap(self):
        np.testing.assert_allclose(wrap([0.0, math.pi / 2, 3 * math.pi / 2, 2.5 * math.pi]),
                                   [0.0, math.pi / 2, -math.pi / 2, math.pi / 2], atol=1e-12)

    def test_theta_definitions(self):
        """theta1 = phi1 + phi2 - phi_drive and theta2 = phi3 + phi4 - phi2."""
        p = from_dimensionless(0.5, 3.0, 2.0, drive_phase=0.2)
        phases = np.array([0.2, 0.5, 0.1, 0.7, -0.4])
        cfg = classical_config(t_end=0.1)
        amplitudes = np.tile(np.exp(1j * phases), (2, 1))
        traj = Trajectory(np.array([0.0, 0.1]), amplitudes, p, cfg)
        series = phase_observables(traj)
        np.testing.assert_allclose(series.theta1, 0.5 + 0.1 - 0.2)
        np.testing.assert_allclose(series.theta2, 0.7 - 0.4 - 0.1)
        self.assertTrue(np.all(series.valid))

    def test_empty_modes_have_no_phase(self):
        traj = synthetic_trajectory(lambda t: np.ones_like(t))
        series = phase_observables(traj)
        self.assertFalse(np.any(series.valid))
        self.assertTrue(np.all(np.isnan(series.theta1)))


class FixedPointTests(SimpleTestCase):

    def test_drift_vanishes_at_steady_state(self):
        p = from_dimensionless(0.5, 3.0, 1.1)
        self.assertLess(drift_norm(steady_state_vector(steady_state(p)), p), 1e-12)

    def test_numeric_fixed_point_below_threshold(self):
        p = from_dimensionless(0.5, 3.0, 0.7)
        point = numeric_fixed_point(p, default_relaxation_config(p, t_end=200.0))
        self.assertTrue(point.converged)
        self.assertAlmostEqual(point.state.intensities()[0], steady_state(p).intensities[0], places=8)

    def test_fixed_point_needs_classical_config(self):
        p = from_dimensionless(0.5, 3.0, 0.7)
        cfg = IntegratorConfig(scheme=Scheme.HEUN, representation=Representation.WIGNER, dt=0.1, t_end=1.0)
        with self.assertRaises(InvalidConfig):
            numeric_fixed_point(p, cfg)


class ThresholdSweepTests(SimpleTestCase):

    def test_threshold_points_are_marginal(self):
        p = from_dimensionless(1.0, 10.0, 0.5)
        points = threshold_sweep(p, [1.0], default_relaxation_config(p, t_end=10.0))
        self.assertTrue(points[0].marginal)

    @tag('slow')
    def test_numeric_matches_analytic(self):
        """Long-time integration lands on the closed-form curve in all three regimes."""
        p = from_dimensionless(1.0, 10.0, 0.5)
        points = threshold_sweep(p, [0.5, 1.05, 1.5])
        self.assertEqual([point.regime for point in points],
                         [Regime.BELOW_THRESHOLD, Regime.FIRST_ABOVE, Regime.SECOND_ABOVE])
        for point in points:
            self.assertLess(point.gap, 1e-4, point)


class DynamicsClassTests(SimpleTestCase):

    def test_converged(self):
        p = from_dimensionless(0.5, 3.0, 0.5)
        pump = steady_state_vector(steady_state(p)).amplitudes[0]
        traj = synthetic_trajectory(lambda t: np.full(t.shape, pump), p)
        self.assertEqual(detect_dynamics_class(traj), DynamicsClass.CONVERGED_FIXED_POINT)

    def test_persistent(self):
        traj = synthetic_trajectory(lambda t: 1.0 + 0.3 * np.sin(2 * np.pi * 0.05 * t))
        self.assertEqual(detect_dynamics_class(traj, window=100.0), DynamicsClass.PERSISTENT_OSCILLATION)

    def test_growing(self):
        traj = synthetic_trajectory(lambda t: 1.0 + 0.01 * np.exp(0.05 * t) * np.sin(2 * np.pi * 0.2 * t))
        self.assertEqual(detect_dynamics_class(traj, window=100.0), DynamicsClass.GROWING_OSCILLATION)

    def test_decaying(self):
        traj = synthetic_trajectory(lambda t: 1.0 + 0.3 * np.exp(-0.05 * t) * np.sin(2 * np.pi * 0.2 * t))
        self.assertEqual(detect_dynamics_class(traj, window=100.0), DynamicsClass.DECAYING_OSCILLATION)

    def test_window_longer_than_run(self):
        traj = synthetic_trajectory(lambda t: np.ones_like(t))
        with self.assertRaises(InvalidConfig):
            detect_dynamics_class(traj, window=500.0)

    def test_dominant_frequency(self):
        traj = synthetic_trajectory(lambda t: 1.0 + 0.3 * np.sin(2 * np.pi * 0.05 * t))
        self.assertAlmostEqual(dominant_frequency(traj, window=100.0), 0.05, delta=0.002)
        self.assertAlmostEqual(dominant_frequency(traj, mode=0, window=100.0), 0.05, delta=0.002)


class PerturbationTests(SimpleTestCase):

    def setUp(self):
        self.p = from_dimensionless(0.5, 3.0, 1.1)

    def _scenario(self, initial, time=10.0):
        cfg = classical_config(dt=0.02, t_end=200.0, record_stride=10, initial_state=initial)
        protocol = Perturb(time=time, target=KickTarget.REAL_PARTS, magnitude=0.2)
        return Scenario('kick', self.p, cfg, protocol)

    def test_recovers_from_real_part_kick(self):
        """Intensities return and theta1 relocks after the kick."""
        scenario = self._scenario(steady_state_vector(steady_state(self.p)))
        traj, series, report = run_perturbation(scenario)
        self.assertTrue(report.recovered)
        self.assertGreater(report.recovery_time, 0.0)
        self.assertGreater(report.max_relative_deviation, 1e-3)
        self.assertLess(abs(report.final_theta[0]), 1e-3)
        self.assertAlmostEqual(traj.times[-1], 200.0)

    def test_kick_needs_steady_state(self):
        scenario = self._scenario(state_for(Representation.CLASSICAL, [0.0, 0.1, 0.1, 0.0, 0.0]), time=1.0)
        with self.assertRaises(NotAtSteadyState):
            run_perturbation(scenario)

    def test_kick_time_inside_run(self):
        with self.assertRaises(InvalidConfig):
            self._scenario(steady_state_vector(steady_state(self.p)), time=300.0)


class DiffusionSlopeTests(SimpleTestCase):

    def _stats(self, n_traj):
        times = np.linspace(0.0, 10.0, 21)
        return EnsembleStats(
            n_traj=n_traj,
            n_discarded=0,
            times=times,
            moments={},
            series_mean={'phase:1-2': np.zeros(times.shape)},
            series_var={'phase:1-2': 0.3 * times + 0.1},
        )

    def test_linear_variance(self):
        slope, error = estimate_diffusion_slope(self._stats(500), window=(2.0, 8.0))
        self.assertAlmostEqual(slope, 0.3)
        self.assertLess(error, 1e-10)

    def test_small_ensemble_rejected(self):
        with self.assertRaises(InsufficientEnsemble):
            estimate_diffusion_slope(self._stats(50))

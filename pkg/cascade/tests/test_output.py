"""
Tests for the CSV writers and the generated plot script.
"""
import math
from pathlib import Path
import tempfile

import numpy as np
from django.test import SimpleTestCase

from cascade.experiments import SweepPoint
from cascade.integrate import EnsembleStats, IntegratorConfig, Moment, Scheme, simulate
from cascade.output import (
    read_csv,
    trajectory_header,
    write_ensemble_csv,
    write_plot_script,
    write_series_csv,
    write_sweep_csv,
    write_trajectory_csv,
)
from cascade.params import Representation, from_dimensionless


class OutputTests(SimpleTestCase):

    def setUp(self):
        directory = tempfile.TemporaryDirectory()
        self.addCleanup(directory.cleanup)
        self.root = Path(directory.name)
        self.p = from_dimensionless(0.5, 3.0, 1.2)
        self.cfg = IntegratorConfig(
            scheme=Scheme.RK4,
            representation=Representation.CLASSICAL,
            dt=0.05,
            t_end=5.0,
            record_stride=10,
        )

    def test_trajectory_columns(self):
        traj = simulate(self.p, self.cfg)
        header, rows = read_csv(write_trajectory_csv(self.root / 'run.csv', traj))
        self.assertEqual(header[:5], ['t', 're_a0', 'im_a0', 'n0', 'phi0'])
        self.assertEqual(header[-2:], ['theta1', 'theta2'])
        self.assertEqual(len(rows), len(traj.times))
        self.assertEqual(len(rows[0]), 1 + 4 * 5 + 2)

    def test_values_round_trip_exactly(self):
        """17 significant digits reproduce every double."""
        traj = simulate(self.p, self.cfg)
        _, rows = read_csv(write_trajectory_csv(self.root / 'run.csv', traj))
        self.assertEqual(rows[-1][1], traj.amplitudes[-1, 0].real)
        self.assertEqual(rows[-1][3], traj.intensities()[-1, 0])

    def test_positive_p_adds_conjugate_sector(self):
        cfg = IntegratorConfig(scheme=Scheme.HEUN, representation=Representation.POSITIVE_P, dt=0.05, t_end=1.0)
        header = trajectory_header(simulate(self.p, cfg))
        self.assertIn('re_ap4', header)
        self.assertEqual(len(header), 1 + 4 * 5 + 2 * 5 + 2)

    def test_identical_runs_identical_bytes(self):
        first = write_trajectory_csv(self.root / 'a.csv', simulate(self.p, self.cfg))
        second = write_trajectory_csv(self.root / 'b.csv', simulate(self.p, self.cfg))
        self.assertEqual(first.read_bytes(), second.read_bytes())
        self.assertNotIn(b'\r', first.read_bytes())

    def test_ensemble_csv(self):
        times = np.array([0.0, 1.0])
        stats = EnsembleStats(
            n_traj=10,
            n_discarded=2,
            times=times,
            moments={'n1': Moment(0.5 + 0.1j, 0.01)},
            series_mean={'n1': np.array([0.5, 0.5 + 0.1j])},
            series_var={'n1': np.array([0.0, 0.2])},
        )
        header, rows = read_csv(write_ensemble_csv(self.root / 'moments.csv', stats))
        self.assertEqual(rows, [['n1', 0.5, 0.1, 0.01, 10.0, 2.0]])
        header, rows = read_csv(write_series_csv(self.root / 'series.csv', stats))
        self.assertEqual(header, ['t', 're_mean_0', 'im_mean_0', 'var_0'])
        self.assertEqual(rows[1], [1.0, 0.5, 0.1, 0.2])

    def test_sweep_csv(self):
        point = SweepPoint(0.5, (0.5, 0, 0, 0, 0), (0.5, 0, 0, 0, 0), False, 'BELOW_THRESHOLD')
        header, rows = read_csv(write_sweep_csv(self.root / 'sweep.csv', [point]))
        self.assertEqual(header[0:3], ['epsilon_sq', 'regime', 'marginal'])
        self.assertEqual(rows[0][1:3], ['BELOW_THRESHOLD', 'false'])
        self.assertEqual(rows[0][-1], 0.0)

    def test_nan_cells(self):
        point = SweepPoint(2.0, (1.0,) * 5, (math.nan,) * 5, False, 'SECOND_ABOVE')
        _, rows = read_csv(write_sweep_csv(self.root / 'sweep.csv', [point]))
        self.assertTrue(math.isnan(rows[0][8]))

    def test_plot_script_points_at_csv(self):
        traj = simulate(self.p, self.cfg)
        csv_path = write_trajectory_csv(self.root / 'run.csv', traj)
        script = write_plot_script(self.root / 'run-plot.py', csv_path, traj, title='weak drive')
        text = script.read_text(encoding='utf-8')
        self.assertIn("'run.csv'", text)
        self.assertIn("'run.png'", text)
        self.assertIn('range(5)', text)
        compile(text, str(script), 'exec')

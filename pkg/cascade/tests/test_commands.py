"""
Tests for the analyze, simulate, ensemble, sweep, perturb and verify management commands.
"""
from io import StringIO
import json
from pathlib import Path
import tempfile
from textwrap import dedent

from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import TestCase, tag

from cascade.models import RunManifest
from cascade.output import read_csv


SYMMETRIC = """
[scenario]
name = symmetric

[params]
gamma = 10, 1, 1, 1, 1
chi = 1
drive_epsilon_sq = {eps_sq}

[integrator]
scheme = rk4
representation = classical
dt = 0.05
t_end = 200
record_stride = 20
phase_seed = 1

[protocol]
kind = {kind}
{protocol}
"""


class CommandTestCase(TestCase):

    def setUp(self):
        directory = tempfile.TemporaryDirectory()
        self.addCleanup(directory.cleanup)
        self.out = Path(directory.name)

    def scenario(self, eps_sq=1.1, kind='trace', protocol='window = 50'):
        path = self.out / 'symmetric.scn'
        path.write_text(dedent(SYMMETRIC).format(eps_sq=eps_sq, kind=kind, protocol=protocol), encoding='utf-8')
        return str(path)

    def call(self, *args, **options):
        stdout = StringIO()
        call_command(*args, out=str(self.out / 'runs'), stdout=stdout, **options)
        return stdout.getvalue()

    def manifest(self):
        lines = (self.out / 'runs' / 'manifest.jsonl').read_text(encoding='utf-8').splitlines()
        return [json.loads(line) for line in lines]

    def assertNothingRecorded(self):
        self.assertFalse((self.out / 'runs' / 'manifest.jsonl').exists())
        self.assertFalse(RunManifest.objects.exists())


class AnalyzeCommandTests(CommandTestCase):

    def test_symmetric_report(self):
        output = self.call('analyze', self.scenario(eps_sq=1.1))
        self.assertIn('Above the first threshold; stable', output)
        self.assertIn('free: phi1-phi2', output)
        rows = (self.out / 'runs' / 'symmetric-analyze.jsonl').read_text().splitlines()
        kinds = [json.loads(row)['kind'] for row in rows]
        self.assertEqual(kinds[:2], ['thresholds', 'steady_state'])
        self.assertIn('diffusion', kinds)

    def test_marginal_drive(self):
        output = self.call('analyze', self.scenario(eps_sq=1.0))
        self.assertIn('Marginal', output)

    def test_asymmetric_falls_back_to_numeric_search(self):
        with self.assertLogs('cascade', level='WARNING'):
            output = self.call('analyze', 'fig7-pdc')
        self.assertIn('searching numerically', output)
        self.assertIn('numeric fixed point', output)

    def test_manifest_rows(self):
        self.call('analyze', self.scenario(eps_sq=0.5))
        started, finalized = self.manifest()
        self.assertEqual(started['run_id'], finalized['run_id'])
        self.assertEqual((started['phase'], finalized['phase']), ('STARTED', 'FINALIZED'))
        self.assertEqual(finalized['extra']['regime'], 'BELOW_THRESHOLD')
        self.assertEqual(RunManifest.objects.filter(command='analyze').count(), 2)


class ScenarioErrorTests(CommandTestCase):

    def test_unknown_scenario(self):
        with self.assertRaises(CommandError) as ctx:
            self.call('simulate', 'no-such-scenario')
        self.assertIn('InvalidScenario', str(ctx.exception))

    def test_invalid_values(self):
        path = self.out / 'bad.scn'
        path.write_text("[params]\ngamma = 1, 1\nchi = 1\ndrive = 1\n[integrator]\ndt = 0.1\nt_end = 1\n")
        with self.assertRaises(CommandError):
            self.call('analyze', str(path))

    def test_wrong_protocol_writes_failed_row(self):
        with self.assertRaises(CommandError):
            self.call('sweep', self.scenario())
        phases = [row['phase'] for row in self.manifest()]
        self.assertEqual(phases, ['STARTED', 'FAILED'])

    def test_bad_thread_count(self):
        with self.assertRaises(CommandError):
            self.call('ensemble', 'a6-wigner-vacuum', threads=0, quick=True)
        self.assertNothingRecorded()


class SimulateCommandTests(CommandTestCase):

    def test_trace_outputs(self):
        output = self.call('simulate', self.scenario(eps_sq=0.5))
        self.assertIn('Converged fixed point', output)
        header, rows = read_csv(self.out / 'runs' / 'symmetric-simulate.csv')
        self.assertEqual(header[0], 't')
        self.assertEqual(rows[-1][0], 200.0)
        self.assertTrue((self.out / 'runs' / 'symmetric-simulate-plot.py').exists())
        finalized = self.manifest()[-1]
        self.assertEqual(finalized['extra']['dynamics_class'], 'CONVERGED_FIXED_POINT')
        self.assertEqual(len(finalized['outputs']), 2)

    def test_seed_flag_recorded(self):
        self.call('simulate', 'a6-wigner-vacuum', seed=42)
        self.assertEqual(self.manifest()[-1]['seed'], 42)

    def test_reruns_are_byte_identical(self):
        self.call('simulate', 'a6-wigner-vacuum')
        first = (self.out / 'runs' / 'a6-wigner-vacuum-simulate.csv').read_bytes()
        self.call('simulate', 'a6-wigner-vacuum')
        self.assertEqual(first, (self.out / 'runs' / 'a6-wigner-vacuum-simulate.csv').read_bytes())


class EnsembleCommandTests(CommandTestCase):

    def test_quick_ensemble(self):
        output = self.call('ensemble', 'a6-wigner-vacuum', quick=True, threads=1)
        self.assertIn('<n0>', output)
        header, rows = read_csv(self.out / 'runs' / 'a6-wigner-vacuum-ensemble.csv')
        self.assertEqual(header[0], 'observable')
        self.assertEqual([row[0] for row in rows], ['n0', 'n1', 'n2', 'n3', 'n4'])
        self.assertEqual(rows[0][4], 1024.0)

    def test_needs_ensemble_protocol(self):
        with self.assertRaises(CommandError):
            self.call('ensemble', self.scenario())


class SweepAndPerturbCommandTests(CommandTestCase):

    def test_sweep(self):
        output = self.call('sweep', self.scenario(kind='sweep', protocol='grid = 0.5, 1.0'))
        self.assertIn('(marginal)', output)
        header, rows = read_csv(self.out / 'runs' / 'symmetric-sweep.csv')
        self.assertEqual([row[0] for row in rows], [0.5, 1.0])

    def test_perturb(self):
        output = self.call('perturb', self.scenario(eps_sq=0.5, kind='perturb',
                                                    protocol='time = 150\ntarget = real_parts\nmagnitude = 0.5'))
        self.assertIn('recovered after', output)
        self.assertTrue((self.out / 'runs' / 'symmetric-perturb.csv').exists())
        self.assertTrue(self.manifest()[-1]['extra']['recovered'])


class VerifyCommandTests(CommandTestCase):

    def test_fast_criteria(self):
        output = self.call('verify', only='a3,A4,A5', quick=True)
        self.assertEqual(output.count('PASS'), 3)

    def test_unknown_criterion(self):
        with self.assertRaises(CommandError):
            self.call('verify', only='A99')
        self.assertNothingRecorded()

    @tag('slow')
    def test_determinism_criterion(self):
        output = self.call('verify', only='A12', quick=True, threads=2)
        self.assertIn('PASS', output)

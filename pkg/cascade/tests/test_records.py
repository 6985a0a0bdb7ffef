"""
Tests for the RunManifest model and the manifest helpers.
"""
import json
import math
from pathlib import Path
import tempfile
import uuid

import numpy as np
from django.test import SimpleTestCase, TestCase, override_settings

from cascade.experiments import Perturb
from cascade.integrate import VacuumSeed
from cascade.models import RunManifest
from cascade.records import MANIFEST_NAME, create_run_record, jsonable, serialize_run_state
from cascade.scenarios import load_scenario


class JsonableTests(SimpleTestCase):

    def test_complex_and_arrays(self):
        self.assertEqual(jsonable(np.array([1 + 2j, 3.0])), [[1.0, 2.0], [3.0, 0.0]])

    def test_non_finite_floats_become_strings(self):
        self.assertEqual(jsonable([math.inf, math.nan, 1.5]), ['inf', 'nan', 1.5])

    def test_numpy_scalars(self):
        self.assertEqual(jsonable({'n': np.int64(3), 'ok': np.bool_(True)}), {'n': 3, 'ok': True})

    def test_dataclasses_carry_their_kind(self):
        value = jsonable(VacuumSeed(phase_seed=4))
        self.assertEqual(value['kind'], 'VacuumSeed')
        self.assertEqual(value['phase_seed'], 4)
        self.assertIsNone(value['amplitude'])

    def test_run_state_is_json(self):
        state = serialize_run_state(load_scenario('fig9'))
        text = json.dumps(state)
        self.assertIn('Perturb', text)
        self.assertEqual(state['integrator']['scheme'], 'RK4')
        self.assertEqual(state['system']['gamma'][2], 0.08)


class RunManifestTests(TestCase):

    def setUp(self):
        directory = tempfile.TemporaryDirectory()
        self.addCleanup(directory.cleanup)
        self.out = Path(directory.name)
        self.scenario = load_scenario('fig3', seed=5)

    def read_manifest(self):
        lines = (self.out / MANIFEST_NAME).read_text(encoding='utf-8').splitlines()
        return [json.loads(line) for line in lines]

    # --- Database rows ---
    def test_started_and_finalized_share_run_id(self):
        run_id = uuid.uuid4()
        create_run_record(run_id, RunManifest.Phase.STARTED, 'simulate', self.out, self.scenario)
        create_run_record(run_id, RunManifest.Phase.FINALIZED, 'simulate', self.out, self.scenario,
                          outputs=[self.out / 'fig3-simulate.csv'], wall_clock=1.5, step_count=100)
        rows = RunManifest.objects.filter(run_id=run_id)
        self.assertEqual(set(rows.values_list('phase', flat=True)), {'STARTED', 'FINALIZED'})
        finalized = rows.get(phase=RunManifest.Phase.FINALIZED)
        self.assertEqual(finalized.seed, 5)
        self.assertEqual(finalized.step_count, 100)
        self.assertTrue(finalized.outputs[0].endswith('fig3-simulate.csv'))

    def test_rows_are_append_only(self):
        """Saving an existing row again or deleting it changes nothing."""
        record = create_run_record(uuid.uuid4(), RunManifest.Phase.STARTED, 'analyze', self.out, self.scenario)
        record.command = 'changed'
        record.save()
        record.delete()
        stored = RunManifest.objects.get(pk=record.pk)
        self.assertEqual(stored.command, 'analyze')

    @override_settings(OPO_RECORD_RUNS=False)
    def test_recording_can_be_disabled(self):
        create_run_record(uuid.uuid4(), RunManifest.Phase.STARTED, 'analyze', self.out, self.scenario)
        self.assertFalse(RunManifest.objects.exists())
        self.assertEqual(len(self.read_manifest()), 1)

    # --- JSON lines ---
    def test_manifest_lines_appended(self):
        run_id = uuid.uuid4()
        create_run_record(run_id, RunManifest.Phase.STARTED, 'simulate', self.out, self.scenario)
        create_run_record(run_id, RunManifest.Phase.FINALIZED, 'simulate', self.out, self.scenario,
                          extra={'final_theta': [0.0, math.nan]})
        started, finalized = self.read_manifest()
        self.assertEqual(started['run_id'], str(run_id))
        self.assertEqual(started['phase'], 'STARTED')
        self.assertEqual(finalized['extra']['final_theta'], [0.0, 'nan'])
        self.assertEqual(finalized['params']['integrator']['seed'], 5)
        self.assertEqual(finalized['command'], 'simulate')

    def test_without_scenario(self):
        record = create_run_record(uuid.uuid4(), RunManifest.Phase.STARTED, 'verify', self.out)
        self.assertEqual(record.scenario_path, '')
        self.assertIsNone(self.read_manifest()[0]['seed'])

    def test_str(self):
        run_id = uuid.uuid4()
        record = create_run_record(run_id, RunManifest.Phase.FAILED, 'ensemble', self.out, self.scenario)
        self.assertEqual(str(record), f"ensemble {run_id} FAILED")

    def test_protocol_recorded(self):
        record = create_run_record(uuid.uuid4(), RunManifest.Phase.STARTED, 'perturb', self.out,
                                   load_scenario('fig9'))
        self.assertEqual(record.params['protocol']['kind'], Perturb.__name__)

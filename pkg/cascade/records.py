"""
Run manifest helpers for the management commands.

Provides a JSON-compatible snapshot of a scenario and writes manifest rows to
the database and to ``<out>/manifest.jsonl``.
"""
from dataclasses import asdict, is_dataclass
import logging
import math
from pathlib import Path

import numpy as np
from django.db import DatabaseError
from rest_framework.renderers import JSONRenderer

from . import __version__
from .conf import opo_setting
from .model import PhaseSpaceState
from .models import RunManifest
from .serializers import RunManifestSerializer


logger = logging.getLogger(__name__)

MANIFEST_NAME = 'manifest.jsonl'


def jsonable(value):
    """Plain JSON types; complex numbers become [re, im], non-finite floats strings."""
    if isinstance(value, PhaseSpaceState):
        return {
            'representation': str(value.representation),
            'topology': str(value.topology),
            'amplitudes': jsonable(value.amplitudes),
        }
    if is_dataclass(value) and not isinstance(value, type):
        return {'kind': type(value).__name__, **jsonable(asdict(value))}
    if isinstance(value, dict):
        return {str(key): jsonable(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(item) for item in value]
    if isinstance(value, np.ndarray):
        return jsonable(value.tolist())
    if isinstance(value, (complex, np.complexfloating)):
        return [jsonable(float(value.real)), jsonable(float(value.imag))]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else str(value)
    if value is None or isinstance(value, str):
        return value
    return str(value)


def serialize_run_state(scenario):
    """
    Everything needed to rerun ``scenario`` exactly: validated parameters,
    the integrator configuration after overrides, and the protocol.
    """
    cfg = scenario.config
    return {
        'name': scenario.name,
        'system': scenario.params.as_dict(),
        'integrator': jsonable({
            'scheme': str(cfg.scheme),
            'representation': str(cfg.representation),
            'dt': cfg.dt,
            't_end': cfg.t_end,
            'record_stride': cfg.record_stride,
            'seed': cfg.seed,
            'initial_state': cfg.initial_state,
            'divergence_bound': cfg.divergence_bound,
        }),
        'protocol': jsonable(scenario.protocol),
    }


def create_run_record(run_id, phase, command, out_dir, scenario=None, outputs=(),
                      wall_clock=None, step_count=None, extra=None):
    """
    Create a RunManifest row and append its JSON form to the run directory.

    The JSON-lines file is always written; a database failure is logged and
    the unsaved row is still returned.

    Returns:
        RunManifest: the (possibly unsaved) manifest row
    """
    record = RunManifest(
        run_id=run_id,
        phase=phase,
        command=command,
        scenario_path=scenario.path if scenario else '',
        params=serialize_run_state(scenario) if scenario else {},
        seed=scenario.config.seed if scenario else None,
        tool_version=__version__,
        outputs=[str(path) for path in outputs],
        wall_clock=wall_clock,
        step_count=step_count,
        extra=jsonable(extra or {}),
    )

    if opo_setting('OPO_RECORD_RUNS'):
        try:
            record.save()
        except DatabaseError as exc:
            logger.warning("Run manifest %s (%s) not stored in the database: %s", run_id, phase, exc)

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    line = JSONRenderer().render(RunManifestSerializer(record).data)
    with open(out_dir / MANIFEST_NAME, 'ab') as handle:
        handle.write(line + b'\n')
    return record

"""
Shared plumbing of the scenario commands: option parsing, output directory,
run manifests and translation of cascade errors into CommandError.
"""
import logging
import os
from pathlib import Path
import time
import uuid

from django.core.exceptions import ValidationError
from django.core.management.base import BaseCommand, CommandError

from cascade.conf import opo_setting
from cascade.exceptions import SimulationError
from cascade.models import RunManifest
from cascade.records import create_run_record
from cascade.scenarios import load_scenario


logger = logging.getLogger(__name__)


def resolve_out_dir(flag=None):
    """--out flag, then the OPO_OUT_DIR environment variable, then the setting."""
    return Path(flag or os.environ.get('OPO_OUT_DIR') or opo_setting('OPO_OUT_DIR'))


def describe_error(exc):
    if isinstance(exc, ValidationError):
        return f"{type(exc).__name__}: {' '.join(exc.messages)}"
    return f"{type(exc).__name__}: {exc}"


class RunResult:
    def __init__(self, outputs=(), step_count=None, extra=None, error=None):
        self.outputs = list(outputs)
        self.step_count = step_count
        self.extra = extra or {}
        # Reported as a CommandError once the manifest is finalized
        self.error = error


class ScenarioCommand(BaseCommand):
    """
    Load a scenario, write a STARTED manifest, run, write a FINALIZED one.

    Subclasses implement ``run(scenario, out_dir, options)`` returning a
    RunResult.
    """
    command_name = None
    takes_scenario = True

    def add_arguments(self, parser):
        if self.takes_scenario:
            parser.add_argument('scenario', help="Scenario file or bundled scenario name.")
        parser.add_argument('--seed', type=int, help="Override the noise seed.")
        parser.add_argument('--threads', type=int, help="Worker processes (default OPO_WORKERS).")
        parser.add_argument('--out', help="Output directory (default OPO_OUT_DIR).")
        parser.add_argument('--quick', action='store_true', help="Reduced ensembles, widened tolerances.")

    def workers(self, options):
        threads = options.get('threads')
        if threads is not None and threads < 1:
            raise CommandError("--threads must be at least 1.")
        return threads or opo_setting('OPO_WORKERS')

    def check_options(self, options):
        """Reject bad flags before anything is recorded."""
        self.workers(options)

    def handle(self, *args, **options):
        out_dir = resolve_out_dir(options.get('out'))
        self.check_options(options)
        try:
            scenario = load_scenario(options['scenario'], seed=options.get('seed')) if self.takes_scenario else None
        except ValidationError as exc:
            raise CommandError(describe_error(exc)) from exc

        run_id = uuid.uuid4()
        create_run_record(run_id, RunManifest.Phase.STARTED, self.command_name, out_dir, scenario)
        started = time.perf_counter()
        try:
            result = self.run(scenario, out_dir, options)
        except (ValidationError, SimulationError, CommandError) as exc:
            create_run_record(
                run_id, RunManifest.Phase.FAILED, self.command_name, out_dir, scenario,
                wall_clock=time.perf_counter() - started, extra={'error': describe_error(exc)},
            )
            if isinstance(exc, CommandError):
                raise
            raise CommandError(describe_error(exc)) from exc

        create_run_record(
            run_id, RunManifest.Phase.FINALIZED, self.command_name, out_dir, scenario,
            outputs=result.outputs,
            wall_clock=time.perf_counter() - started,
            step_count=result.step_count,
            extra=result.extra,
        )
        logger.info("%s finished (run %s), wrote %d file(s).", self.command_name, run_id, len(result.outputs))
        if result.error:
            raise CommandError(result.error)

    def output_path(self, out_dir, scenario, suffix):
        return Path(out_dir) / f"{scenario.name}-{self.command_name}{suffix}"

    def run(self, scenario, out_dir, options):
        raise NotImplementedError

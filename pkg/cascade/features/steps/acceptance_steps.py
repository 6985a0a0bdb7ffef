import json
from io import StringIO
from pathlib import Path
import tempfile

from behave import when, then
from django.core.management import call_command
from django.core.management.base import CommandError

from cascade.acceptance import run_criteria


def _run(context, command, name, **options):
    directory = tempfile.TemporaryDirectory()
    context.add_cleanup(directory.cleanup)
    context.out = Path(directory.name)
    stdout = StringIO()
    context.error = None
    try:
        call_command(command, name, out=str(context.out), stdout=stdout, **options)
    except CommandError as exc:
        context.error = exc
    context.output = stdout.getvalue()


@when('I run the acceptance criteria "{only}"')
def step_impl_run_criteria(context, only):
    context.results = run_criteria(only.split(','), quick=True)


@when('I run "{command}" on the bundled scenario "{name}"')
def step_impl_run_command(context, command, name):
    _run(context, command, name)


@when('I run "{command}" on the bundled scenario "{name}" with --quick')
def step_impl_run_command_quick(context, command, name):
    _run(context, command, name, quick=True, threads=1)


@then('every criterion passes')
def step_impl_criteria_pass(context):
    failed = [f"{r.identifier}: {r.detail}" for r in context.results if not r.passed]
    assert not failed, failed


@then('the output mentions "{text}"')
def step_impl_output_mentions(context, text):
    assert context.error is None, context.error
    assert text in context.output, context.output


@then('the file "{name}" is written')
def step_impl_file_written(context, name):
    assert context.error is None, context.error
    assert (context.out / name).is_file()


@then('the manifest ends with a "{phase}" row for "{command}"')
def step_impl_manifest_row(context, phase, command):
    lines = (context.out / 'manifest.jsonl').read_text(encoding='utf-8').splitlines()
    last = json.loads(lines[-1])
    assert last['phase'] == phase, last
    assert last['command'] == command, last


@then('the command fails with "{text}"')
def step_impl_command_fails(context, text):
    assert context.error is not None
    assert text in str(context.error), context.error

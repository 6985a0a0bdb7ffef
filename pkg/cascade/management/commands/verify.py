from django.core.management.base import CommandError

from cascade.acceptance import CRITERIA, run_criteria

from ._base import RunResult, ScenarioCommand


def selected_criteria(options):
    if not options.get('only'):
        return None
    return [item.strip().upper() for item in options['only'].split(',') if item.strip()]


class Command(ScenarioCommand):
    help = "Run the acceptance criteria and print a pass/fail table."
    command_name = 'verify'
    takes_scenario = False

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--only', help="Comma-separated criteria, e.g. A1,A3.")

    def check_options(self, options):
        super().check_options(options)
        unknown = [item for item in selected_criteria(options) or () if item not in CRITERIA]
        if unknown:
            raise CommandError(f"Unknown criteria: {', '.join(unknown)}")

    def run(self, scenario, out_dir, options):
        results = run_criteria(selected_criteria(options), quick=options.get('quick', False),
                               workers=self.workers(options))
        for result in results:
            status = self.style.SUCCESS('PASS') if result.passed else self.style.ERROR('FAIL')
            self.stdout.write(f"{result.identifier:<4} {status}  {result.title} ({result.elapsed:.1f}s)")
            self.stdout.write(f"      {result.detail}")

        failed = [result.identifier for result in results if not result.passed]
        return RunResult(
            extra={'results': {r.identifier: {'passed': r.passed, 'detail': r.detail} for r in results}},
            error=f"Failing criteria: {', '.join(failed)}" if failed else None,
        )

from cascade.conf import opo_setting
from cascade.exceptions import InvalidConfig
from cascade.experiments import Sweep, default_relaxation_config, threshold_sweep
from cascade.output import write_sweep_csv

from ._base import RunResult, ScenarioCommand


class Command(ScenarioCommand):
    help = "Analytic and long-time numeric steady-state intensities over an epsilon^2 grid."
    command_name = 'sweep'

    def run(self, scenario, out_dir, options):
        if not isinstance(scenario.protocol, Sweep):
            raise InvalidConfig(f"Scenario {scenario.name} has no sweep protocol.")
        p = scenario.params
        cfg = scenario.config
        if options.get('quick'):
            cfg = default_relaxation_config(p, t_end=min(cfg.t_end, 500.0))

        points = threshold_sweep(p, scenario.protocol.grid, cfg, opo_setting('OPO_MARGINAL_TOLERANCE'))
        path = write_sweep_csv(self.output_path(out_dir, scenario, '.csv'), points)

        gaps = [point.gap for point in points if not point.marginal]
        worst = max(gaps) if gaps else 0.0
        for point in points:
            flag = ' (marginal)' if point.marginal else ''
            self.stdout.write(f"eps^2 = {point.epsilon_sq:<8g} {point.regime:<16} gap {point.gap:.2e}{flag}")
        return RunResult(
            outputs=[path],
            step_count=len(points) * cfg.n_steps,
            extra={'max_gap': worst, 'points': len(points)},
        )

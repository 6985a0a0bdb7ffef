from cascade.conf import opo_setting
from cascade.exceptions import InvalidConfig
from cascade.experiments import EnsembleMoments
from cascade.integrate import run_ensemble
from cascade.output import write_ensemble_csv, write_series_csv

from ._base import RunResult, ScenarioCommand


# --quick caps ensembles at this many trajectories
QUICK_TRAJECTORIES = 1024


class Command(ScenarioCommand):
    help = "Stochastic ensemble moments of a scenario's observables."
    command_name = 'ensemble'

    def run(self, scenario, out_dir, options):
        protocol = scenario.protocol
        if not isinstance(protocol, EnsembleMoments):
            raise InvalidConfig(f"Scenario {scenario.name} has no ensemble protocol.")
        n_traj = min(protocol.n_traj, QUICK_TRAJECTORIES) if options.get('quick') else protocol.n_traj

        stats = run_ensemble(
            scenario.params,
            scenario.config,
            n_traj,
            protocol.observables,
            window=protocol.window,
            workers=self.workers(options),
            block_size=opo_setting('OPO_ENSEMBLE_BLOCK'),
        )

        moments_path = write_ensemble_csv(self.output_path(out_dir, scenario, '.csv'), stats)
        series_path = write_series_csv(self.output_path(out_dir, scenario, '-series.csv'), stats)
        for text, moment in stats.moments.items():
            self.stdout.write(f"<{text}> = {moment.mean.real:.6g} {moment.mean.imag:+.6g}i "
                              f"+/- {moment.std_error:.2g}")
        self.stdout.write(f"{stats.n_traj} trajectories kept, {stats.n_discarded} discarded")
        return RunResult(
            outputs=[moments_path, series_path],
            step_count=stats.n_requested * scenario.config.n_steps,
            extra={'n_traj': stats.n_traj, 'n_discarded': stats.n_discarded},
        )

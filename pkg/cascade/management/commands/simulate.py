from dataclasses import replace
import math

from cascade.experiments import (
    Perturb, Trace, detect_dynamics_class, dominant_frequency, drift_norm, phase_observables,
)
from cascade.integrate import Perturbation, simulate
from cascade.output import write_plot_script, write_trajectory_csv
from cascade.params import Representation

from ._base import RunResult, ScenarioCommand


class Command(ScenarioCommand):
    help = "Integrate one trajectory of a scenario; writes a CSV and a plot script."
    command_name = 'simulate'

    def run(self, scenario, out_dir, options):
        p, cfg = scenario.params, scenario.config
        protocol = scenario.protocol
        if isinstance(protocol, Perturb):
            cfg = replace(cfg, perturbations=(
                Perturbation(protocol.time, protocol.target, protocol.magnitude, protocol.modes),
            ))

        traj = simulate(p, cfg)
        window = protocol.window if isinstance(protocol, Trace) else None
        dynamics = detect_dynamics_class(traj, window)
        series = phase_observables(traj)

        csv_path = write_trajectory_csv(self.output_path(out_dir, scenario, '.csv'), traj)
        plot_path = write_plot_script(
            self.output_path(out_dir, scenario, '-plot.py'), csv_path, traj,
            title=scenario.description or scenario.name,
        )

        extra = {
            'dynamics_class': dynamics,
            'dominant_frequency': dominant_frequency(traj, window=window),
            'final_theta': [series.theta1[-1], series.theta2[-1]],
            'final_intensities': traj.intensities()[-1],
        }
        if cfg.representation == Representation.CLASSICAL:
            extra['final_drift_norm'] = drift_norm(traj.final_state, p)

        self.stdout.write(f"{scenario.name}: {dynamics.label}; {traj.steps} steps to t = {traj.times[-1]:.6g}")
        if not math.isnan(series.theta1[-1]):
            self.stdout.write(f"theta1 = {series.theta1[-1]:.6g}, theta2 = {series.theta2[-1]:.6g}")
        self.stdout.write(f"wrote {csv_path}")
        return RunResult(outputs=[csv_path, plot_path], step_count=traj.steps, extra=extra)

from cascade.experiments import run_perturbation
from cascade.output import write_plot_script, write_trajectory_csv

from ._base import RunResult, ScenarioCommand


class Command(ScenarioCommand):
    help = "Run to steady state, kick the fields, and report the recovery."
    command_name = 'perturb'

    def run(self, scenario, out_dir, options):
        traj, series, report = run_perturbation(scenario)
        csv_path = write_trajectory_csv(self.output_path(out_dir, scenario, '.csv'), traj)
        plot_path = write_plot_script(
            self.output_path(out_dir, scenario, '-plot.py'), csv_path, traj,
            title=scenario.description or scenario.name,
        )

        if report.recovered:
            self.stdout.write(f"recovered after {report.recovery_time:.6g} time units "
                              f"(max relative deviation {report.max_relative_deviation:.3g})")
        else:
            self.stdout.write("did not recover within the run")
        self.stdout.write(f"theta1, theta2 {'returned' if report.thetas_recovered else 'did not return'}; "
                          f"final = ({report.final_theta[0]:.3g}, {report.final_theta[1]:.3g})")
        self.stdout.write("permanent phase offsets: " + ", ".join(f"{x:.4g}" for x in report.phase_offsets))
        return RunResult(outputs=[csv_path, plot_path], step_count=traj.steps, extra=report)

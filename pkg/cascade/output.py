"""
CSV datasets and plot scripts written by the management commands.

Floats are written with 17 significant digits (``'.17g'``), independent of
locale, with ``\\n`` line endings and a fixed column order, so identical runs
produce byte-identical files.
"""
import csv
from pathlib import Path

import numpy as np

from .experiments import phase_observables
from .params import Representation


FLOAT_FORMAT = '.17g'


def _cell(value):
    if isinstance(value, (bool, np.bool_)):
        return 'true' if value else 'false'
    if isinstance(value, (float, np.floating, int, np.integer)):
        return format(float(value), FLOAT_FORMAT)
    return str(value)


def _write(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', newline='', encoding='utf-8') as handle:
        writer = csv.writer(handle, lineterminator='\n')
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(value) for value in row])
    return path


def trajectory_header(traj):
    n = traj.params.n_modes
    header = ['t']
    for i in range(n):
        header += [f're_a{i}', f'im_a{i}', f'n{i}', f'phi{i}']
    if traj.config.representation == Representation.POSITIVE_P:
        for i in range(n):
            header += [f're_ap{i}', f'im_ap{i}']
    return header + ['theta1', 'theta2']


def write_trajectory_csv(path, traj):
    """One row per record: t, per mode (Re a, Im a, |a|^2, phase), theta1, theta2."""
    series = phase_observables(traj)
    alpha = traj.alpha()
    intensities = traj.intensities()
    positive_p = traj.config.representation == Representation.POSITIVE_P
    alpha_plus = traj.alpha_plus() if positive_p else None

    def rows():
        for k, t in enumerate(traj.times):
            row = [t]
            for i in range(alpha.shape[1]):
                row += [alpha[k, i].real, alpha[k, i].imag, intensities[k, i], series.phases[k, i]]
            if positive_p:
                for i in range(alpha.shape[1]):
                    row += [alpha_plus[k, i].real, alpha_plus[k, i].imag]
            yield row + [series.theta1[k], series.theta2[k]]

    return _write(path, trajectory_header(traj), rows())


def write_ensemble_csv(path, stats):
    """One row per observable with the ensemble mean and its standard error."""
    header = ['observable', 're_mean', 'im_mean', 'std_error', 'n_traj', 'n_discarded']
    rows = (
        [text, moment.mean.real, moment.mean.imag, moment.std_error, stats.n_traj, stats.n_discarded]
        for text, moment in stats.moments.items()
    )
    return _write(path, header, rows)


def write_series_csv(path, stats):
    """Ensemble mean and variance of every observable at every record."""
    observables = list(stats.series_mean)
    header = ['t']
    for index in range(len(observables)):
        header += [f're_mean_{index}', f'im_mean_{index}', f'var_{index}']

    def rows():
        for k, t in enumerate(stats.times):
            row = [t]
            for text in observables:
                mean = stats.series_mean[text][k]
                row += [mean.real, mean.imag, stats.series_var[text][k]]
            yield row

    return _write(path, header, rows())


def write_sweep_csv(path, points):
    header = (['epsilon_sq', 'regime', 'marginal']
              + [f'analytic_n{i}' for i in range(5)]
              + [f'numeric_n{i}' for i in range(5)]
              + ['gap'])
    rows = (
        [point.epsilon_sq, point.regime, point.marginal, *point.analytic, *point.numeric, point.gap]
        for point in points
    )
    return _write(path, header, rows)


def _number(text):
    try:
        return float(text)
    except ValueError:
        return text


def read_csv(path):
    """
    Read a CSV written by this module.

    Returns:
        tuple: (header, rows) with numeric cells parsed back to float
    """
    with open(path, newline='', encoding='utf-8') as handle:
        reader = csv.reader(handle)
        header = next(reader)
        rows = [[_number(cell) for cell in row] for row in reader]
    return header, rows


_PLOT_TEMPLATE = '''\
"""Plot {csv_name}: intracavity powers (top) and theta1, theta2 (bottom)."""
import csv
import sys

import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else {csv_name!r}
with open(path, newline="") as handle:
    rows = list(csv.DictReader(handle))

t = [float(r["t"]) for r in rows]
fig, (powers, phases) = plt.subplots(2, 1, sharex=True, figsize=(6, 6))
for i in range({n_modes}):
    powers.plot(t, [float(r["n%d" % i]) for r in rows], label="|a%d|^2" % i)
powers.set_ylabel("intracavity power")
powers.legend(loc="best")
phases.plot(t, [float(r["theta1"]) for r in rows], label="theta1")
phases.plot(t, [float(r["theta2"]) for r in rows], label="theta2")
phases.set_ylim(-3.3, 3.3)
phases.set_xlabel("t")
phases.set_ylabel("phase difference")
phases.legend(loc="best")
fig.suptitle({title!r})
fig.tight_layout()
fig.savefig({png_name!r})
plt.show()
'''


def write_plot_script(path, csv_path, traj, title=''):
    """Self-contained matplotlib script rendering ``csv_path``."""
    path = Path(path)
    csv_name = Path(csv_path).name
    text = _PLOT_TEMPLATE.format(
        csv_name=csv_name,
        n_modes=traj.params.n_modes,
        title=title,
        png_name=str(Path(csv_name).with_suffix('.png')),
    )
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding='utf-8')
    return path

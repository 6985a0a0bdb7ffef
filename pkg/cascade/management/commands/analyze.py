import logging

import numpy as np
from rest_framework.renderers import JSONRenderer

from cascade.analytic import Regime, steady_state
from cascade.conf import opo_setting
from cascade.experiments import default_relaxation_config, numeric_fixed_point
from cascade.model import classical_jacobian
from cascade.params import Topology, general_thresholds, is_symmetric
from cascade.records import jsonable
from cascade.stability import analyze, eigenvalues_dense

from ._base import RunResult, ScenarioCommand


logger = logging.getLogger(__name__)

# Eigenvalues this close to zero belong to free phases of the fixed point.
ZERO_MODE = 1e-8


class Command(ScenarioCommand):
    help = "Regime, thresholds, steady state and linear stability of a scenario's parameters."
    command_name = 'analyze'

    def run(self, scenario, out_dir, options):
        p = scenario.params
        first, second = general_thresholds(p)
        rows = [{'kind': 'thresholds', 'first_sq': first, 'second_sq': second}]
        self.stdout.write(f"{scenario.name}: |E_thr,1|^2 = {first:.10g}, |E_thr,2|^2 = {second:.10g}, "
                          f"|E0|^2 = {abs(p.drive) ** 2:.10g}")

        if p.topology == Topology.NONDEGENERATE and is_symmetric(p) and p.chi1 > 0:
            extra = self._analytic(p, rows)
        else:
            extra = self._numeric(scenario, rows)

        path = self.output_path(out_dir, scenario, '.jsonl')
        path.parent.mkdir(parents=True, exist_ok=True)
        renderer = JSONRenderer()
        with open(path, 'wb') as handle:
            for row in rows:
                handle.write(renderer.render(jsonable(row)) + b'\n')
        return RunResult(outputs=[path], extra=extra)

    def _analytic(self, p, rows):
        report = analyze(
            p,
            tolerance=opo_setting('OPO_STABILITY_TOLERANCE'),
            marginal_tolerance=opo_setting('OPO_MARGINAL_TOLERANCE'),
            adiabatic_ratio_min=opo_setting('OPO_ADIABATIC_RATIO_MIN'),
        )
        if report.regime == Regime.MARGINAL:
            self.stdout.write(f"{Regime(report.regime).label}; no steady state is reported on a threshold")
            rows.append({'kind': 'regime', 'regime': report.regime})
            return {'regime': report.regime}

        sol = steady_state(p, opo_setting('OPO_MARGINAL_TOLERANCE'))
        verdict = 'stable' if report.overall_stable else ('marginal' if report.marginal else 'unstable')
        self.stdout.write(f"{Regime(report.regime).label}; {verdict}; "
                          f"eigenvalue max real part {report.max_real_part:.6g}")
        self.stdout.write("steady-state intensities: " + ", ".join(
            f"n{i} = {n:.10g}" for i, n in enumerate(sol.intensities)))
        for constraint in sol.phase_constraints:
            self.stdout.write(f"  phase: {constraint.label}")
        for name in sol.free_phases:
            self.stdout.write(f"  free: {name}")

        rows.append({
            'kind': 'steady_state',
            'regime': sol.regime,
            'intensities': sol.intensities,
            'scaled': [n / sol.critical_intensity for n in sol.intensities],
            'phase_constraints': [c.label for c in sol.phase_constraints],
            'free_phases': sol.free_phases,
        })
        for result in report.subsystems:
            self.stdout.write(f"  {result.subsystem.name}: "
                              f"{'stable' if result.stable else 'marginal' if result.marginal else 'unstable'}, "
                              f"max Re = {float(np.max(result.eigenvalues.real)):.6g}")
            rows.append({
                'kind': 'subsystem',
                'name': result.subsystem.name,
                'variables': result.subsystem.variables,
                'eigenvalues': result.eigenvalues,
                'stable': result.stable,
                'marginal': result.marginal,
            })
        for phase in report.diffusing_phases:
            self.stdout.write(f"  diffusing {phase.symbol}: rate {phase.rate:.6g}")
            rows.append({'kind': 'diffusion', 'symbol': phase.symbol, 'rate': phase.rate})

        return {
            'regime': report.regime,
            'stable': report.overall_stable,
            'max_real_part': report.max_real_part,
        }

    def _numeric(self, scenario, rows):
        p = scenario.params
        logger.warning("No closed-form steady state for %s (asymmetric or degenerate); "
                       "falling back to a numeric fixed-point search.", scenario.name)
        self.stdout.write("analytic steady state not available; searching numerically")

        point = numeric_fixed_point(p, default_relaxation_config(p))
        eigenvalues = eigenvalues_dense(classical_jacobian(point.state, p))
        moving = eigenvalues[np.abs(eigenvalues) > ZERO_MODE]
        top = float(np.max(moving.real)) if moving.size else 0.0
        stable = point.converged and top < 0

        self.stdout.write(f"numeric fixed point: {'converged' if point.converged else 'not converged'} "
                          f"(drift norm {point.drift_norm:.3e} at t = {point.time:.6g}); "
                          f"{'stable' if stable else 'unstable'}; eigenvalue max real part {top:.6g}")
        self.stdout.write("intensities: " + ", ".join(
            f"n{i} = {n:.10g}" for i, n in enumerate(point.state.intensities())))
        rows.append({
            'kind': 'numeric_fixed_point',
            'intensities': point.state.intensities(),
            'drift_norm': point.drift_norm,
            'converged': point.converged,
            'eigenvalues': eigenvalues,
            'stable': stable,
        })
        return {'regime': None, 'stable': stable, 'max_real_part': top, 'converged': point.converged}

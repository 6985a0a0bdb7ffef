"""
Acceptance criteria A1-A12.

Each criterion is a function ``(quick, workers) -> CriterionResult``
registered with ``@criterion``; ``run_criteria`` runs a selection in
identifier order. ``quick`` shrinks ensembles and widens statistical
tolerances where the criterion says so.
"""
from dataclasses import dataclass, replace
import filecmp
import logging
import math
from pathlib import Path
import tempfile
import time

import numpy as np
from django.core.management import call_command

from .analytic import Regime, classify_regime, steady_state, thresholds
from .experiments import (
    DynamicsClass, default_relaxation_config, detect_dynamics_class, dominant_frequency,
    estimate_diffusion_slope, phase_observables, run_perturbation, threshold_sweep,
)
from .integrate import block_rng, draw_noise, em_step_array, integrate_batch, run_ensemble, simulate
from .oracle import FockConfig, evolve_master, expect, vacuum_density
from .params import Coefficients, Representation, from_dimensionless
from .scenarios import load_scenario
from .stability import (
    analyze, below_threshold_matrix, characteristic_cubic, eigenvalues_dense, evaluate,
    phase_diffusion_rates, regime3_subsystems, routh_hurwitz_cubic, second_threshold_by_bisection,
)


logger = logging.getLogger(__name__)

CRITERIA = {}


@dataclass
class CriterionResult:
    identifier: str
    title: str
    passed: bool
    detail: str
    elapsed: float = 0.0


def criterion(identifier, title):
    def register(func):
        CRITERIA[identifier] = (title, func)
        return func
    return register


def _order(identifier):
    return int(identifier[1:])


def run_criteria(only=None, quick=False, workers=1):
    """Run the selected criteria (all when ``only`` is empty) in identifier order."""
    selected = sorted(only or CRITERIA, key=_order)
    unknown = [identifier for identifier in selected if identifier not in CRITERIA]
    if unknown:
        raise KeyError(f"Unknown criteria: {', '.join(unknown)}")

    results = []
    for identifier in selected:
        title, func = CRITERIA[identifier]
        started = time.perf_counter()
        passed, detail = func(quick=quick, workers=workers)
        result = CriterionResult(identifier, title, bool(passed), detail, time.perf_counter() - started)
        logger.info("%s %s (%.1fs): %s", identifier, 'passed' if result.passed else 'FAILED', result.elapsed, detail)
        results.append(result)
    return results


def _relative(a, b, floor=1e-300):
    return abs(a - b) / max(abs(b), floor)


# --- Analytic structure ---

@criterion('A1', "Threshold structure and numeric sweep")
def threshold_structure(quick=False, workers=1):
    p = from_dimensionless(g=1.0, gamma_r=10.0, epsilon=1.0)
    first, second = thresholds(p)
    eps_first = abs(p.drive) ** 2 / first
    ratio = second / first
    closed = abs(eps_first - 1.0) <= 1e-12 and abs(ratio - 1.21) <= 1e-12

    grid = (0.25, 0.5, 0.9, 1.05, 1.15, 1.5, 2.0)
    points = threshold_sweep(p, grid, default_relaxation_config(p, t_end=1500.0))
    worst = max(point.gap for point in points if not point.marginal)
    return closed and worst < 1e-6, f"eps_thr2^2 = {ratio:.15g}, max sweep gap {worst:.2e}"


@criterion('A2', "Regime-3 conservation n1 = n2 + n3")
def regime3_conservation(quick=False, workers=1):
    rng = np.random.default_rng(2)
    wanted = 20 if quick else 100
    params = []
    analytic_worst = 0.0
    while len(params) < wanted:
        gamma_r = rng.uniform(5.0, 20.0)
        eps_sq = (1.0 + 1.0 / gamma_r) ** 2 * rng.uniform(1.2, 3.0)
        p = from_dimensionless(g=rng.uniform(0.05, 1.0), gamma_r=gamma_r, epsilon=math.sqrt(eps_sq))
        if classify_regime(p) != Regime.SECOND_ABOVE or not analyze(p).overall_stable:
            continue
        n = steady_state(p).intensities
        analytic_worst = max(analytic_worst, abs(n[1] - n[2] - n[3]) / n[1])
        params.append(p)

    dt = min(0.05, 0.5 / max(max(p.gamma) for p in params))
    final, alive = integrate_batch(params, replace(default_relaxation_config(params[0], t_end=1500.0), dt=dt))
    intensities = np.abs(final) ** 2
    numeric = np.abs(intensities[:, 1] - intensities[:, 2] - intensities[:, 3]) / intensities[:, 1]
    numeric_worst = float(np.max(numeric)) if np.all(alive) else math.inf
    passed = analytic_worst <= 1e-14 and numeric_worst < 1e-6
    return passed, f"{len(params)} sets; analytic {analytic_worst:.1e}, numeric {numeric_worst:.1e}"


@criterion('A3', "Below-threshold spectrum")
def below_threshold_spectrum(quick=False, workers=1):
    worst = 0.0
    verdicts = {}
    for eps in (0.0, 0.3, 0.7, 0.99, 1.01):
        result = evaluate(below_threshold_matrix(eps))
        expected = np.sort(np.array([-1 - eps, -1 - eps, -1 + eps, -1 + eps]))
        worst = max(worst, float(np.max(np.abs(np.sort(result.eigenvalues.real) - expected))),
                    float(np.max(np.abs(result.eigenvalues.imag))))
        verdicts[eps] = result.stable
    flips = verdicts[0.99] and not verdicts[1.01]
    return worst < 1e-10 and flips, f"max eigenvalue error {worst:.1e}; stable at 0.99, unstable at 1.01: {flips}"


@criterion('A4', "Second threshold from the regime-2 linearization")
def second_threshold_localization(quick=False, workers=1):
    errors = []
    for gamma_r in (5.0, 10.0, 50.0):
        p = from_dimensionless(g=1.0, gamma_r=gamma_r, epsilon=1.0)
        errors.append(_relative(second_threshold_by_bisection(p), thresholds(p)[1]))
    return max(errors) < 1e-8, "relative errors " + ", ".join(f"{e:.1e}" for e in errors)


@criterion('A5', "Routh-Hurwitz against companion roots")
def routh_hurwitz_agreement(quick=False, workers=1):
    rng = np.random.default_rng(5)
    mismatches = checked = 0
    for coefficients in rng.uniform(-3.0, 3.0, size=(1000, 3)):
        top = float(np.max(np.roots([1.0, *coefficients]).real))
        if abs(top) < 1e-9:
            continue
        checked += 1
        mismatches += routh_hurwitz_cubic(coefficients) != (top < 0)

    drawn = 0
    while drawn < 100:
        gamma_r = rng.uniform(5.0, 50.0)
        eps_sq = (1.0 + 1.0 / gamma_r) ** 2 * rng.uniform(1.05, 4.0)
        p = from_dimensionless(g=rng.uniform(0.05, 2.0), gamma_r=gamma_r, epsilon=math.sqrt(eps_sq))
        block = regime3_subsystems(steady_state(p), p)[1].matrix
        top = float(np.max(eigenvalues_dense(block).real))
        drawn += 1
        if abs(top) < 1e-9:
            continue
        checked += 1
        mismatches += routh_hurwitz_cubic(characteristic_cubic(block)) != (top < 0)
    return mismatches == 0, f"{mismatches} mismatches over {checked} cubics"


# --- Stochastic moments ---

@criterion('A6', "Wigner vacuum occupation 1/2")
def wigner_vacuum(quick=False, workers=1):
    scenario = load_scenario('a6-wigner-vacuum')
    protocol = scenario.protocol
    n_traj = 2000 if quick else protocol.n_traj
    stats = run_ensemble(scenario.params, scenario.config, n_traj, protocol.observables,
                         window=protocol.window, workers=workers)
    deviations = [abs(m.mean.real - 0.5) / m.std_error for m in stats.moments.values()]
    return max(deviations) < 3.0, "deviations (in standard errors) " + ", ".join(f"{d:.2f}" for d in deviations)


# Truncation at n0 = 3 leaves ~0.5% of the pump population on the top level.
ORACLE_SATURATION = 0.02


@criterion('A7', "Positive-P moments against the Fock-space oracle")
def oracle_agreement(quick=False, workers=1):
    scenario = load_scenario('a7-oracle')
    p, protocol = scenario.params, scenario.protocol
    cfg = FockConfig((3, 2, 2, 2, 2))
    rho = evolve_master(vacuum_density(cfg), p, cfg, t_end=scenario.config.t_end, dt=0.01,
                        saturation=ORACLE_SATURATION)

    n_traj = 2000 if quick else protocol.n_traj
    stats = run_ensemble(p, scenario.config, n_traj, protocol.observables,
                         window=protocol.window, workers=workers)
    worst = 0.0
    parts = []
    for text in protocol.observables:
        reference = expect(rho, text, cfg)
        moment = stats.moments[text]
        for part in ('real', 'imag'):
            gap = abs(getattr(moment.mean, part) - getattr(reference, part)) / max(moment.std_error, 1e-300)
            worst = max(worst, gap)
        parts.append(f"<{text}> {moment.mean.real:.4g} vs {reference.real:.4g}")
    return worst < 3.0, "; ".join(parts) + f"; worst {worst:.2f} se"


@criterion('A8', "Regime-2 phase diffusion rate")
def phase_diffusion(quick=False, workers=1):
    scenario = load_scenario('a8-diffusion')
    p, protocol = scenario.params, scenario.protocol
    n_traj = 200 if quick else protocol.n_traj
    stats = run_ensemble(p, scenario.config, n_traj, protocol.observables, workers=workers)
    slope, error = estimate_diffusion_slope(stats, protocol.observables[0], window=protocol.window)
    expected = phase_diffusion_rates(steady_state(p), p)[0].rate
    tolerance = 0.3 if quick else 0.15
    return _relative(slope, expected) < tolerance, f"slope {slope:.4g} +/- {error:.2g}, expected {expected:.4g}"


# --- Dynamics ---

@criterion('A9', "Dynamics classes of the bundled traces")
def dynamics_classes(quick=False, workers=1):
    fig3 = simulate(*_scenario_run('fig3'))
    series = phase_observables(fig3)
    converged = detect_dynamics_class(fig3) == DynamicsClass.CONVERGED_FIXED_POINT
    locked = abs(series.theta1[-1]) < 1e-4 and abs(series.theta2[-1]) < 1e-4

    spiking = simulate(*_scenario_run('fig6'))
    faster = simulate(*_scenario_run('fig6-7p0'))
    window = load_scenario('fig6').protocol.window
    persistent = detect_dynamics_class(spiking, window) == DynamicsClass.PERSISTENT_OSCILLATION
    slow, fast = dominant_frequency(spiking, window=window), dominant_frequency(faster, window=window)

    growing = detect_dynamics_class(simulate(*_scenario_run('fig8-bottom'))) == DynamicsClass.GROWING_OSCILLATION
    passed = converged and locked and persistent and fast > slow and growing
    return passed, (f"fig3 converged={converged} locked={locked}; fig6 persistent={persistent}, "
                    f"frequency {slow:.4g} -> {fast:.4g}; fig8-bottom growing={growing}")


def _scenario_run(name):
    scenario = load_scenario(name)
    return scenario.params, scenario.config


@criterion('A10', "Recovery from perturbations")
def perturbation_recovery(quick=False, workers=1):
    _, _, both = run_perturbation(load_scenario('fig9'))
    _, _, real = run_perturbation(load_scenario('fig11'))
    recovered = both.recovered and both.thetas_recovered and max(abs(x) for x in both.final_theta) < 1e-3
    excursion = real.intermediate_pump_excursion > math.pi / 2 and real.recovered
    return recovered and excursion, (
        f"fig9 recovered={both.recovered} after {both.recovery_time:.4g}, thetas={both.thetas_recovered}; "
        f"fig11 pump-phase excursion {real.intermediate_pump_excursion:.3g} rad"
    )


# --- Integrators ---

def _final_classical(p, cfg, dt):
    final, alive = integrate_batch([p], replace(cfg, dt=dt))
    return final[0]


def _coupled_em_means(p, dts, t_end, n_traj, seed=11, block=1024):
    """
    <n1> at t_end under Euler-Maruyama for each dt in ``dts`` (coarsest first),
    every level driven by the same Brownian paths.
    """
    finest = dts[-1]
    factors = [int(round(dt / finest)) for dt in dts]
    c = Coefficients.of(p)
    sums = np.zeros(len(dts))
    for index, start in enumerate(range(0, n_traj, block)):
        count = min(block, n_traj - start)
        rng = block_rng(seed, index)
        states = [np.zeros((count, 2 * p.n_modes), dtype=complex) for _ in dts]
        pending = [np.zeros((count, 8), dtype=complex) for _ in dts]
        for step in range(int(round(t_end / finest))):
            noise = draw_noise(rng, Representation.POSITIVE_P, p.topology, finest, size=count)
            for level, factor in enumerate(factors):
                pending[level] += noise
                if (step + 1) % factor == 0:
                    states[level] = em_step_array(states[level], c, Representation.POSITIVE_P,
                                                  dts[level], pending[level] / factor)
                    pending[level][...] = 0.0
        for level, a in enumerate(states):
            sums[level] += float(np.sum((a[:, 1] * a[:, p.n_modes + 1]).real))
    return sums / n_traj


@criterion('A11', "Integrator convergence orders")
def integrator_orders(quick=False, workers=1):
    scenario = load_scenario('fig3')
    p = scenario.params
    cfg = replace(scenario.config, t_end=100.0)
    reference = _final_classical(p, cfg, 0.0125)
    coarse = np.max(np.abs(_final_classical(p, cfg, 0.1) - reference))
    fine = np.max(np.abs(_final_classical(p, cfg, 0.05) - reference))
    rk4_ratio = coarse / fine

    oracle = load_scenario('a7-oracle').params
    means = _coupled_em_means(oracle, (0.04, 0.02, 0.01), t_end=4.0, n_traj=4000 if quick else 20000)
    em_ratio = (means[0] - means[1]) / (means[1] - means[2])

    em_band = 0.4 if quick else 0.25
    passed = abs(rk4_ratio / 16.0 - 1.0) <= 0.2 and abs(em_ratio / 2.0 - 1.0) <= em_band
    return passed, f"RK4 error ratio {rk4_ratio:.3g}; Euler-Maruyama bias ratio {em_ratio:.3g}"


# --- Artifacts ---

def _same_files(left, right, names):
    return all(filecmp.cmp(Path(left) / name, Path(right) / name, shallow=False) for name in names)


@criterion('A12', "Byte-identical outputs across reruns and thread counts")
def determinism(quick=False, workers=1):
    with tempfile.TemporaryDirectory() as root:
        runs = {key: Path(root) / key for key in ('one', 'two', 'wide')}
        names = ['a6-wigner-vacuum-simulate.csv']
        for key in ('one', 'two'):
            call_command('simulate', 'a6-wigner-vacuum', out=str(runs[key]), verbosity=0)
            if not quick:
                call_command('simulate', 'fig3', out=str(runs[key]), verbosity=0)
        if not quick:
            names.append('fig3-simulate.csv')
        reruns = _same_files(runs['one'], runs['two'], names)

        call_command('ensemble', 'a6-wigner-vacuum', out=str(runs['one']), threads=1, quick=True, verbosity=0)
        call_command('ensemble', 'a6-wigner-vacuum', out=str(runs['wide']), threads=8, quick=True, verbosity=0)
        threads = _same_files(runs['one'], runs['wide'],
                              ['a6-wigner-vacuum-ensemble.csv', 'a6-wigner-vacuum-ensemble-series.csv'])
    return reruns and threads, f"reruns identical={reruns}; threads 1 vs 8 identical={threads}"

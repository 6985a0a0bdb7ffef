"""
Numerical experiments on the cascade: threshold sweeps, dynamics traces,
perturbation protocols, phase observables and moment/diffusion estimates.
"""
from dataclasses import dataclass, field, replace
import logging
import math

import numpy as np
from django.db import models

from .analytic import sweep_curve, thresholds
from .exceptions import InsufficientEnsemble, InvalidConfig, NotAtSteadyState
from .integrate import IntegratorConfig, KickTarget, Perturbation, Scheme, Trajectory, VacuumSeed, integrate_batch, simulate
from .model import PhaseSpaceState, drift_array
from .params import Coefficients, Representation, Topology


logger = logging.getLogger(__name__)

STEADY_DRIFT_NORM = 1e-6
RECOVERY_TOLERANCE = 1e-3
PHASE_AMPLITUDE_FLOOR = 1e-12
MIN_DIFFUSION_ENSEMBLE = 100


# --- Scenario ---

@dataclass(frozen=True)
class Sweep:
    grid: tuple


@dataclass(frozen=True)
class Trace:
    """``window`` is the analysis span (time units) at the end of the run."""
    window: float = None


@dataclass(frozen=True)
class Perturb:
    time: float
    target: str = KickTarget.BOTH
    magnitude: float = 1.0
    modes: tuple = None


@dataclass(frozen=True)
class EnsembleMoments:
    n_traj: int
    observables: tuple
    window: tuple = None


@dataclass(frozen=True)
class Scenario:
    name: str
    params: object
    config: IntegratorConfig
    protocol: object = field(default_factory=Trace)
    path: str = ''
    description: str = ''

    def __post_init__(self):
        if isinstance(self.protocol, Perturb):
            end = self.config.t0 + self.config.t_end
            if not (self.config.t0 < self.protocol.time < end):
                raise InvalidConfig(f"Perturbation time {self.protocol.time} must fall inside the run.")
            if not math.isfinite(self.protocol.magnitude):
                raise InvalidConfig("Perturbation magnitude must be finite.")


class DynamicsClass(models.TextChoices):
    CONVERGED_FIXED_POINT = 'CONVERGED_FIXED_POINT', 'Converged fixed point'
    PERSISTENT_OSCILLATION = 'PERSISTENT_OSCILLATION', 'Persistent oscillation'
    GROWING_OSCILLATION = 'GROWING_OSCILLATION', 'Growing oscillation'
    DECAYING_OSCILLATION = 'DECAYING_OSCILLATION', 'Decaying, not yet converged'


# --- Phases ---

@dataclass
class PhaseSeries:
    times: np.ndarray
    theta1: np.ndarray
    theta2: np.ndarray
    phases: np.ndarray
    valid: np.ndarray


def wrap(angle):
    """Map angles onto (-pi, pi]."""
    return np.angle(np.exp(1j * np.asarray(angle)))


def _mean_amplitude(traj):
    alpha = traj.alpha()
    if traj.config.representation == Representation.POSITIVE_P:
        return 0.5 * (alpha + np.conj(traj.alpha_plus()))
    return alpha


def phase_observables(traj):
    """
    theta1 = phi1 + phi2 - phi_drive and theta2 = phi3 + phi4 - phi2 (wrapped)
    plus the unwrapped individual phases. Samples where a contributing
    amplitude is below 1e-12 are NaN and flagged invalid.
    """
    amplitude = _mean_amplitude(traj)
    phases = np.unwrap(np.angle(amplitude), axis=0)
    drive_phase = traj.params.drive_phase

    if traj.params.topology == Topology.DEGENERATE:
        second = 2.0 * phases[:, 1] - phases[:, 2]
        involved = (1, 2)
    else:
        second = phases[:, 3] + phases[:, 4] - phases[:, 2]
        involved = (1, 2, 3, 4)

    valid = np.all(np.abs(amplitude[:, involved]) > PHASE_AMPLITUDE_FLOOR, axis=1)
    theta1 = np.where(valid, wrap(phases[:, 1] + phases[:, 2] - drive_phase), np.nan)
    theta2 = np.where(valid, wrap(second), np.nan)
    return PhaseSeries(traj.times, theta1, theta2, phases, valid)


# --- Fixed points and sweeps ---

def drift_norm(state, p):
    return float(np.linalg.norm(drift_array(state.representation, state.amplitudes, Coefficients.of(p))))


@dataclass(frozen=True)
class FixedPoint:
    state: PhaseSpaceState
    drift_norm: float
    time: float

    @property
    def converged(self):
        return self.drift_norm < STEADY_DRIFT_NORM


def numeric_fixed_point(p, cfg):
    """Long-time classical integration; the fallback when no closed form exists."""
    if cfg.representation != Representation.CLASSICAL:
        raise InvalidConfig("Fixed points are searched with the classical equations.")
    traj = simulate(p, replace(cfg, record_stride=cfg.n_steps, perturbations=()))
    state = traj.final_state
    return FixedPoint(state, drift_norm(state, p), float(traj.times[-1]))


def default_relaxation_config(p, t_end=1500.0, seed=0):
    """Classical RK4 from a randomized vacuum seed; dt resolves the fastest loss rate."""
    dt = min(0.05, 0.5 / max(p.gamma))
    return IntegratorConfig(
        scheme=Scheme.RK4,
        representation=Representation.CLASSICAL,
        dt=dt,
        t_end=t_end,
        record_stride=1,
        initial_state=VacuumSeed(phase_seed=seed),
    )


@dataclass(frozen=True)
class SweepPoint:
    epsilon_sq: float
    analytic: tuple
    numeric: tuple
    marginal: bool
    regime: str

    @property
    def gap(self):
        """Largest numeric-analytic difference relative to max(analytic, 1e-3) in scaled units."""
        return max(abs(n - a) / max(abs(a), 1e-3) for n, a in zip(self.numeric, self.analytic))


def threshold_sweep(p_template, grid, cfg=None, marginal_tolerance=1e-9):
    """
    Analytic and long-time numeric scaled intensities for every epsilon^2 in
    ``grid``; all grid points are integrated as one batch.
    """
    first, second = thresholds(p_template)
    critical = (p_template.gamma[1] / p_template.chi1) ** 2
    phase = np.exp(1j * p_template.drive_phase)
    cfg = cfg or default_relaxation_config(p_template)

    rows = sweep_curve(p_template, grid)
    params = [p_template.with_drive(math.sqrt(row.epsilon_sq * first) * phase) for row in rows]
    final, alive = integrate_batch(params, cfg)

    points = []
    for row, amplitudes, ok in zip(rows, final, alive):
        drive_sq = row.epsilon_sq * first
        marginal = (abs(drive_sq - first) <= marginal_tolerance * first
                    or abs(drive_sq - second) <= marginal_tolerance * second)
        numeric = tuple(np.abs(amplitudes) ** 2 / critical) if ok else tuple([math.nan] * 5)
        points.append(SweepPoint(row.epsilon_sq, row.scaled, numeric, marginal, row.regime))
    return points


# --- Dynamics classification ---

def _window_slice(traj, window):
    span = traj.times[-1] - traj.times[0]
    if window is None:
        window = 0.25 * span
    if window > span + 1e-12:
        raise InvalidConfig(f"Analysis window {window} exceeds the trajectory span {span}.")
    return traj.times >= traj.times[-1] - window - 1e-12


def _total_intensity(traj):
    return np.sum(np.abs(_mean_amplitude(traj)) ** 2, axis=1)


def detect_dynamics_class(traj, window=None):
    """
    Classify the end of a trajectory from the total intensity over the last
    ``window`` time units: converged, persistent, growing or decaying
    oscillation, by the ratio of peak-to-peak excursions of its two halves.
    """
    mask = _window_slice(traj, window)
    total = _total_intensity(traj)[mask]
    times = traj.times[mask]
    mean = float(np.mean(total))
    variation = float(np.ptp(total)) / mean if mean > 0 else float(np.ptp(total))

    final = traj.final_state
    if final.representation == Representation.CLASSICAL:
        norm = drift_norm(final, traj.params)
    else:
        norm = math.inf
    if norm < STEADY_DRIFT_NORM and variation < STEADY_DRIFT_NORM:
        return DynamicsClass.CONVERGED_FIXED_POINT

    middle = times[0] + 0.5 * (times[-1] - times[0])
    early = float(np.ptp(total[times <= middle]))
    late = float(np.ptp(total[times > middle]))
    ratio = late / early if early > 0 else (math.inf if late > 0 else 1.0)
    if ratio > 1.25:
        return DynamicsClass.GROWING_OSCILLATION
    if ratio >= 0.8:
        return DynamicsClass.PERSISTENT_OSCILLATION
    return DynamicsClass.DECAYING_OSCILLATION


def dominant_frequency(traj, mode=None, window=None):
    """Frequency (cycles per time unit) of the largest non-DC FFT peak of the intensity."""
    mask = _window_slice(traj, window)
    if mode is None:
        signal = _total_intensity(traj)[mask]
    else:
        signal = np.abs(_mean_amplitude(traj)[mask, mode]) ** 2
    signal = signal - signal.mean()
    spacing = traj.config.dt * traj.config.record_stride
    spectrum = np.abs(np.fft.rfft(signal))
    freqs = np.fft.rfftfreq(signal.size, d=spacing)
    if spectrum.size < 2:
        return 0.0
    return float(freqs[1:][np.argmax(spectrum[1:])])


# --- Perturbations ---

@dataclass
class RecoveryReport:
    kick_time: float
    recovered: bool
    recovery_time: float
    thetas_recovered: bool
    final_theta: tuple
    phase_offsets: tuple
    max_theta2_excursion: float
    intermediate_pump_excursion: float
    max_relative_deviation: float = 0.0


def _concatenate(before, after, p, cfg):
    times = np.concatenate([before.times[:-1], after.times])
    amplitudes = np.concatenate([before.amplitudes[:-1], after.amplitudes])
    return Trajectory(
        times=times,
        amplitudes=amplitudes,
        params=p,
        config=cfg,
        steps=before.steps + after.steps,
    )


def run_perturbation(scenario):
    """
    Integrate to the kick time, check the steady state, kick, and integrate
    on; returns (Trajectory, PhaseSeries, RecoveryReport).
    """
    protocol = scenario.protocol
    if not isinstance(protocol, Perturb):
        raise InvalidConfig(f"Scenario {scenario.name} has no perturbation protocol.")
    p, cfg = scenario.params, scenario.config
    lead = protocol.time - cfg.t0

    before = simulate(p, replace(cfg, t_end=lead, perturbations=()))
    norm = drift_norm(before.final_state, p)
    if norm >= STEADY_DRIFT_NORM:
        raise NotAtSteadyState(norm, protocol.time)

    kick = Perturbation(protocol.time, protocol.target, protocol.magnitude, protocol.modes)
    after = simulate(p, replace(
        cfg,
        initial_state=before.final_state,
        t0=protocol.time,
        t_end=cfg.t_end - lead,
        perturbations=(kick,),
    ))
    traj = _concatenate(before, after, p, cfg)
    series = phase_observables(traj)
    return traj, series, recovery_report(traj, series, protocol.time)


def recovery_report(traj, series, kick_time, tolerance=RECOVERY_TOLERANCE):
    k = int(np.searchsorted(traj.times, kick_time - 1e-12))
    reference = np.abs(_mean_amplitude(traj)[k])
    magnitudes = np.abs(_mean_amplitude(traj)[k:])
    scale = np.where(reference > 0, reference, 1.0)
    deviation = np.max(np.abs(magnitudes - reference) / scale, axis=1)

    outside = np.nonzero(deviation >= tolerance)[0]
    recovered = bool(deviation[-1] < tolerance)
    if not recovered:
        recovery_time = math.inf
    elif outside.size == 0:
        recovery_time = 0.0
    else:
        recovery_time = float(traj.times[k + outside[-1] + 1] - kick_time)

    theta_before = np.array([series.theta1[k], series.theta2[k]])
    theta_after = np.array([series.theta1[-1], series.theta2[-1]])
    thetas_recovered = bool(np.all(np.abs(wrap(theta_after - theta_before)) < tolerance))

    pump_shift = np.abs(wrap(series.phases[k:, 2] - series.phases[k, 2]))
    return RecoveryReport(
        kick_time=kick_time,
        recovered=recovered,
        recovery_time=recovery_time,
        thetas_recovered=thetas_recovered,
        final_theta=tuple(float(x) for x in theta_after),
        phase_offsets=tuple(float(x) for x in series.phases[-1] - series.phases[k]),
        max_theta2_excursion=float(np.nanmax(np.abs(series.theta2[k:]))),
        intermediate_pump_excursion=float(np.max(pump_shift)),
        max_relative_deviation=float(np.max(deviation)),
    )


# --- Ensembles ---

def estimate_diffusion_slope(stats, observable='phase:1-2', window=None, min_traj=MIN_DIFFUSION_ENSEMBLE):
    """Least-squares slope of the ensemble variance of a phase observable against time."""
    if stats.n_traj < min_traj:
        raise InsufficientEnsemble(stats.n_traj, min_traj)
    times = stats.times
    variance = stats.series_var[observable]
    mask = np.ones(times.shape, dtype=bool)
    if window is not None:
        mask = (times >= window[0] - 1e-12) & (times <= window[1] + 1e-12)
    t, v = times[mask], variance[mask]
    if t.size < 4:
        raise InvalidConfig("Diffusion window needs at least four recorded samples.")
    if np.all(v == v[0]):
        return 0.0, 0.0
    (slope, _), cov = np.polyfit(t, v, 1, cov=True)
    return float(slope), float(math.sqrt(max(cov[0, 0], 0.0)))

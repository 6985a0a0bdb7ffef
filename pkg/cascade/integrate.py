"""
Fixed-step integration of the cascade equations.

Classical runs use RK4; positive-P and truncated Wigner runs use
Euler-Maruyama or a drift-only Heun predictor-corrector. Every integration
is a vectorized batch: a single trajectory is a batch of one, ensembles are
split into fixed-size blocks whose random streams depend only on
(seed, block index), so results do not depend on how blocks are spread over
worker processes.
"""
from dataclasses import dataclass, field, replace
import logging
import math
from multiprocessing import Pool

import numpy as np
from django.db import models

from .exceptions import InvalidConfig, NonFinite, ParameterError, ShapeMismatch
from .model import PhaseSpaceState, drift_array, positive_p_noise_array
from .observables import evaluate_product, parse_observable
from .params import Coefficients, Representation, Topology, component_count, mode_count


logger = logging.getLogger(__name__)

DEFAULT_BLOCK_SIZE = 256
DEFAULT_DIVERGENCE_BOUND = 1e6
DEFAULT_VACUUM_SEED = 1e-6


class Scheme(models.TextChoices):
    RK4 = 'RK4', 'Runge-Kutta 4'
    EULER_MARUYAMA = 'EULER_MARUYAMA', 'Euler-Maruyama'
    HEUN = 'HEUN', 'Stochastic Heun'


class KickTarget(models.TextChoices):
    REAL_PARTS = 'REAL_PARTS', 'Real parts'
    IMAG_PARTS = 'IMAG_PARTS', 'Imaginary parts'
    BOTH = 'BOTH', 'Real and imaginary parts'


@dataclass(frozen=True)
class VacuumSeed:
    """
    Minute seed amplitudes on modes 1.. with the pump at zero.

    ``amplitude`` is absolute; when None the seed is ``scale * gamma/chi``.
    Phases come from their own stream keyed by ``phase_seed`` so that the
    noise seed can change without moving a classical run.
    """
    amplitude: float = None
    randomize_phases: bool = True
    phase_seed: int = 0
    scale: float = DEFAULT_VACUUM_SEED


@dataclass(frozen=True)
class Vacuum:
    """The representation's own vacuum: zeros, or Wigner vacuum noise."""


@dataclass(frozen=True)
class Perturbation:
    """Additive kick alpha -> alpha + magnitude * mask(alpha) on ``modes`` (all when None)."""
    time: float
    target: str = KickTarget.BOTH
    magnitude: float = 1.0
    modes: tuple = None


@dataclass(frozen=True)
class IntegratorConfig:
    scheme: str
    representation: str
    dt: float
    t_end: float
    record_stride: int = 1
    seed: int = 0
    initial_state: object = field(default_factory=VacuumSeed)
    perturbations: tuple = ()
    t0: float = 0.0
    divergence_bound: float = DEFAULT_DIVERGENCE_BOUND

    def __post_init__(self):
        object.__setattr__(self, 'scheme', Scheme(self.scheme))
        object.__setattr__(self, 'representation', Representation(self.representation))
        object.__setattr__(self, 'perturbations', tuple(self.perturbations))

        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise InvalidConfig(f"dt must be positive, got {self.dt}.")
        if not self.t_end >= self.dt:
            raise InvalidConfig(f"t_end ({self.t_end}) must be at least dt ({self.dt}).")
        if int(self.record_stride) < 1:
            raise InvalidConfig("record_stride must be at least 1.")
        stochastic = self.representation != Representation.CLASSICAL
        if self.scheme == Scheme.RK4 and stochastic:
            raise InvalidConfig("RK4 integrates the classical equations only.")
        if self.scheme != Scheme.RK4 and not stochastic:
            raise InvalidConfig(f"{self.scheme} needs a positive-P or Wigner representation.")
        for kick in self.perturbations:
            if not (0 <= kick.time - self.t0 < self.t_end and math.isfinite(kick.magnitude)):
                raise InvalidConfig(f"Perturbation at t = {kick.time} lies outside the run or is not finite.")

    @property
    def n_steps(self):
        return int(round(self.t_end / self.dt))

    @property
    def stochastic(self):
        return self.representation != Representation.CLASSICAL


@dataclass
class Trajectory:
    """Recorded run; ``amplitudes`` has one row per record, one column per component."""
    times: np.ndarray
    amplitudes: np.ndarray
    params: object
    config: IntegratorConfig
    steps: int = 0
    aborted: bool = False
    abort_time: float = None

    @property
    def states(self):
        return [
            PhaseSpaceState(self.config.representation, row, self.params.topology)
            for row in self.amplitudes
        ]

    @property
    def final_state(self):
        return PhaseSpaceState(self.config.representation, self.amplitudes[-1], self.params.topology)

    def alpha(self):
        return self.amplitudes[:, :self.params.n_modes]

    def alpha_plus(self):
        if self.config.representation == Representation.POSITIVE_P:
            return self.amplitudes[:, self.params.n_modes:]
        return np.conj(self.amplitudes)

    def intensities(self):
        return (self.alpha() * self.alpha_plus()).real

    def series(self, mode):
        return self.amplitudes[:, mode]


@dataclass(frozen=True)
class Moment:
    mean: complex
    std_error: float


@dataclass
class EnsembleStats:
    n_traj: int
    n_discarded: int
    times: np.ndarray
    moments: dict
    series_mean: dict
    series_var: dict

    @property
    def n_requested(self):
        return self.n_traj + self.n_discarded


# --- Random streams ---

def block_rng(seed, block_index, stream=0):
    """Independent PCG64 stream for one block of trajectories."""
    sequence = np.random.SeedSequence(int(seed), spawn_key=(int(block_index), int(stream)))
    return np.random.Generator(np.random.PCG64(sequence))


def correlated_noise_block(rng, dt, size=None):
    """
    Pair-correlated positive-P noises (z1, z2, z1+, z2+, z3, z4, z3+, z4+).

    Each pair is ((u + iv), (u - iv)) / sqrt(2 dt), so <za zb> = 1/dt and
    every other second moment vanishes.
    """
    shape = () if size is None else tuple(np.atleast_1d(size))
    u = rng.standard_normal(shape + (4,))
    v = rng.standard_normal(shape + (4,))
    scale = 1.0 / math.sqrt(2.0 * dt)
    first = (u + 1j * v) * scale
    second = (u - 1j * v) * scale
    return np.stack([first, second], axis=-1).reshape(shape + (8,))


def draw_noise(rng, representation, topology, dt, size=None):
    """One step of noise for ``step_em`` / ``step_heun``."""
    shape = () if size is None else tuple(np.atleast_1d(size))
    if representation == Representation.WIGNER:
        n = mode_count(topology)
        u = rng.standard_normal(shape + (n,))
        v = rng.standard_normal(shape + (n,))
        return (u + 1j * v) / math.sqrt(2.0 * dt)
    if representation != Representation.POSITIVE_P:
        raise ParameterError("Classical runs take no noise.", code='wrong_representation')
    if topology == Topology.DEGENERATE:
        u = rng.standard_normal(shape + (2,))
        v = rng.standard_normal(shape + (2,))
        pairs = np.stack([u + 1j * v, u - 1j * v], axis=-1).reshape(shape + (4,)) / math.sqrt(2.0 * dt)
        single = rng.standard_normal(shape + (2,)) / math.sqrt(dt)
        return np.concatenate([pairs, single.astype(complex)], axis=-1)
    return correlated_noise_block(rng, dt, size)


# --- Step kernels over (..., components) arrays ---

def _rk4(a, c, representation, dt):
    k1 = drift_array(representation, a, c)
    k2 = drift_array(representation, a + 0.5 * dt * k1, c)
    k3 = drift_array(representation, a + 0.5 * dt * k2, c)
    k4 = drift_array(representation, a + dt * k3, c)
    return a + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def noise_increment(representation, a, c, noise, dt):
    """G(a) . noise . dt for a noise draw from ``draw_noise``."""
    if representation == Representation.WIGNER:
        return np.sqrt(c.gamma) * noise * dt

    coefficient = positive_p_noise_array(a, c)
    increment = np.zeros_like(a, dtype=complex)
    if c.topology == Topology.DEGENERATE:
        increment[..., 1] = coefficient[..., 0] * noise[..., 0] + coefficient[..., 2] * noise[..., 4]
        increment[..., 2] = coefficient[..., 0] * noise[..., 1]
        increment[..., 4] = coefficient[..., 1] * noise[..., 2] + coefficient[..., 3] * noise[..., 5]
        increment[..., 5] = coefficient[..., 1] * noise[..., 3]
    else:
        increment[..., 1] = coefficient[..., 0] * noise[..., 0]
        increment[..., 2] = coefficient[..., 0] * noise[..., 1]
        increment[..., 6] = coefficient[..., 2] * noise[..., 2]
        increment[..., 7] = coefficient[..., 2] * noise[..., 3]
        increment[..., 3] = coefficient[..., 1] * noise[..., 4]
        increment[..., 4] = coefficient[..., 1] * noise[..., 5]
        increment[..., 8] = coefficient[..., 3] * noise[..., 6]
        increment[..., 9] = coefficient[..., 3] * noise[..., 7]
    return increment * dt


def em_step_array(a, c, representation, dt, noise):
    return a + drift_array(representation, a, c) * dt + noise_increment(representation, a, c, noise, dt)


def heun_step_array(a, c, representation, dt, noise):
    kick = noise_increment(representation, a, c, noise, dt)
    drift = drift_array(representation, a, c)
    predictor = a + drift * dt + kick
    return a + 0.5 * (drift + drift_array(representation, predictor, c)) * dt + kick


_STOCHASTIC_STEPS = {
    Scheme.EULER_MARUYAMA: em_step_array,
    Scheme.HEUN: heun_step_array,
}


def _checked(state, amplitudes, time):
    if not np.all(np.isfinite(amplitudes)):
        raise NonFinite(time)
    return PhaseSpaceState(state.representation, amplitudes, state.topology)


def step_rk4(state, p, dt, t=0.0):
    """One RK4 step from time ``t``; NonFinite reports the time t + dt."""
    if state.representation != Representation.CLASSICAL:
        raise InvalidConfig("RK4 integrates the classical equations only.")
    return _checked(state, _rk4(state.amplitudes, Coefficients.of(p), state.representation, dt), t + dt)


def step_em(state, p, dt, noise, t=0.0):
    if state.representation == Representation.CLASSICAL:
        raise InvalidConfig("Euler-Maruyama needs a positive-P or Wigner state.")
    a = em_step_array(state.amplitudes, Coefficients.of(p), state.representation, dt, np.asarray(noise))
    return _checked(state, a, t + dt)


def step_heun(state, p, dt, noise, t=0.0):
    if state.representation == Representation.CLASSICAL:
        raise InvalidConfig("Heun needs a positive-P or Wigner state.")
    a = heun_step_array(state.amplitudes, Coefficients.of(p), state.representation, dt, np.asarray(noise))
    return _checked(state, a, t + dt)


# --- Kicks and initial conditions ---

def apply_kick(amplitudes, kick, n_modes):
    """Kick every component whose mode is in ``kick.modes``; sectors are kicked alike."""
    a = np.array(amplitudes, dtype=complex, copy=True)
    modes = range(n_modes) if kick.modes is None else kick.modes
    columns = [k for k in range(a.shape[-1]) if k % n_modes in modes]
    part = a[..., columns]
    if kick.target == KickTarget.REAL_PARTS:
        delta = part.real.astype(complex)
    elif kick.target == KickTarget.IMAG_PARTS:
        delta = 1j * part.imag
    else:
        delta = part
    a[..., columns] = part + kick.magnitude * delta
    return a


def amplitude_scale(c):
    """gamma/chi in amplitude units, per batch entry."""
    gamma = np.max(np.atleast_1d(c.gamma)[..., 1:], axis=-1)
    chi = np.maximum(c.chi1, c.chi2)
    with np.errstate(divide='ignore'):
        return np.where(chi > 0, gamma / np.where(chi > 0, chi, 1.0), np.inf)


def _initial(c, cfg, count, rng, block_index):
    representation, topology = cfg.representation, c.topology
    n = mode_count(topology)
    width = component_count(representation, topology)
    initial = cfg.initial_state

    if isinstance(initial, PhaseSpaceState):
        if initial.representation != representation or initial.topology != topology:
            raise ShapeMismatch(width, initial.amplitudes.shape[0])
        return np.tile(initial.amplitudes, (count, 1))

    if isinstance(initial, Vacuum):
        alpha = np.zeros((count, n), dtype=complex)
        if representation == Representation.WIGNER:
            alpha = (rng.standard_normal((count, n)) + 1j * rng.standard_normal((count, n))) / 2.0
    elif isinstance(initial, VacuumSeed):
        if initial.amplitude is not None:
            rho = np.full(count, float(initial.amplitude))
        else:
            scale = amplitude_scale(c)
            if not np.all(np.isfinite(scale)):
                raise InvalidConfig("A relative vacuum seed needs nonzero coupling; give an absolute amplitude.")
            rho = np.broadcast_to(initial.scale * scale, (count,)).astype(float)
        phases = np.zeros((count, n - 1))
        if initial.randomize_phases:
            phases = block_rng(initial.phase_seed, block_index, stream=1).uniform(0.0, 2.0 * np.pi, (count, n - 1))
        alpha = np.zeros((count, n), dtype=complex)
        alpha[:, 1:] = rho[:, None] * np.exp(1j * phases)
    else:
        raise InvalidConfig(f"Unsupported initial state {initial!r}.")

    if representation == Representation.POSITIVE_P:
        return np.concatenate([alpha, np.conj(alpha)], axis=-1)
    return alpha


def _phases(a, representation, n):
    """Per-mode phase; positive-P uses the mean amplitude (alpha + conj(alpha+))/2."""
    if representation == Representation.POSITIVE_P:
        return np.angle(0.5 * (a[..., :n] + np.conj(a[..., n:])))
    return np.angle(a)


# --- Batch engine ---

@dataclass
class _BlockResult:
    times: np.ndarray
    recorded: np.ndarray = None
    alive: np.ndarray = None
    abort_times: np.ndarray = None
    steps: int = 0
    sums: dict = field(default_factory=dict)


def _integrate(c, cfg, count, block_index, observables=(), window=None, record=False):
    """
    Integrate ``count`` trajectories sharing one random stream.

    Observables are evaluated at every record and reduced over the surviving
    trajectories at the end of the block.
    """
    representation = cfg.representation
    n = mode_count(c.topology)
    rng = block_rng(cfg.seed, block_index)
    a = _initial(c, cfg, count, rng, block_index)

    stride = int(cfg.record_stride)
    n_steps = cfg.n_steps
    n_records = n_steps // stride + 1
    times = cfg.t0 + cfg.dt * stride * np.arange(n_records)

    kicks = {}
    for kick in cfg.perturbations:
        kicks.setdefault(int(round((kick.time - cfg.t0) / cfg.dt)), []).append(kick)

    bound = cfg.divergence_bound * amplitude_scale(c)
    alive = np.ones(count, dtype=bool)
    abort_times = np.full(count, np.nan)

    parsed = [parse_observable(text, n) for text in observables]
    values = {obs.text: np.zeros((count, n_records), dtype=complex) for obs in parsed}
    needs_phase = any(obs.is_phase for obs in parsed)
    recorded = np.zeros((n_records, count, a.shape[-1]), dtype=complex) if record else None

    previous = _phases(a, representation, n) if needs_phase else None
    unwrapped = previous.copy() if needs_phase else None

    def sample(k):
        nonlocal previous
        if record:
            recorded[k] = a
        if not parsed:
            return
        if needs_phase:
            raw = _phases(a, representation, n)
            jump = raw - previous
            jump -= 2.0 * np.pi * np.round(jump / (2.0 * np.pi))
            unwrapped[...] += jump
            previous = raw
        alpha = a[..., :n]
        alpha_plus = a[..., n:] if representation == Representation.POSITIVE_P else np.conj(alpha)
        for obs in parsed:
            if obs.is_phase:
                i, j = obs.phase_pair
                values[obs.text][:, k] = unwrapped[:, i] - unwrapped[:, j]
            else:
                values[obs.text][:, k] = evaluate_product(obs, alpha, alpha_plus)

    sample(0)
    stochastic_step = _STOCHASTIC_STEPS.get(cfg.scheme)
    for step in range(n_steps):
        for kick in kicks.get(step, ()):
            a = apply_kick(a, kick, n)

        if stochastic_step is None:
            a = _rk4(a, c, representation, cfg.dt)
        else:
            noise = draw_noise(rng, representation, c.topology, cfg.dt, size=count)
            a = stochastic_step(a, c, representation, cfg.dt, noise)

        bad = ~np.all(np.isfinite(a), axis=-1) | (np.max(np.abs(a), axis=-1) > bound)
        newly = bad & alive
        if np.any(newly):
            abort_times[newly] = cfg.t0 + (step + 1) * cfg.dt
            alive &= ~bad
            a[bad] = 0.0
            if unwrapped is not None:
                previous[bad] = 0.0
                unwrapped[bad] = 0.0

        if (step + 1) % stride == 0:
            sample((step + 1) // stride)

    result = _BlockResult(times=times, recorded=recorded, alive=alive, abort_times=abort_times, steps=n_steps)
    if parsed:
        in_window = _window_mask(times, window)
        kept = alive
        for obs in parsed:
            x = values[obs.text][kept]
            per_trajectory = x[:, in_window].mean(axis=1)
            result.sums[obs.text] = (
                x.sum(axis=0),
                (np.abs(x) ** 2).sum(axis=0),
                per_trajectory.sum(),
                float((np.abs(per_trajectory) ** 2).sum()),
            )
    return result


def _window_mask(times, window):
    if window is None:
        mask = np.zeros(times.shape, dtype=bool)
        mask[-1] = True
        return mask
    start, stop = window
    mask = (times >= start - 1e-12) & (times <= stop + 1e-12)
    if not np.any(mask):
        raise InvalidConfig(f"Statistics window {window} contains no recorded sample.")
    return mask


# --- Public runners ---

def simulate(p, cfg):
    """Single trajectory on block 0's random stream."""
    result = _integrate(Coefficients.of(p), cfg, 1, 0, record=True)
    if not result.alive[0]:
        raise NonFinite(float(result.abort_times[0]))
    return Trajectory(
        times=result.times,
        amplitudes=result.recorded[:, 0, :],
        params=p,
        config=cfg,
        steps=result.steps,
    )


def integrate_batch(params, cfg):
    """
    Final amplitudes of one trajectory per parameter set, integrated together.

    Returns (amplitudes, alive) with amplitudes of shape (len(params), components).
    """
    c = Coefficients.stack(params)
    result = _integrate(c, replace(cfg, record_stride=cfg.n_steps), len(params), 0, record=True)
    return result.recorded[-1], result.alive


def _ensemble_block(task):
    p, cfg, block_index, count, observables, window = task
    result = _integrate(Coefficients.of(p), cfg, count, block_index, observables, window)
    return result.times, int(result.alive.sum()), result.sums


def run_ensemble(p, cfg, n_traj, observables, window=None, workers=1, block_size=DEFAULT_BLOCK_SIZE):
    """
    Moments of ``observables`` over ``n_traj`` stochastic trajectories.

    Trajectories that diverge are discarded and counted. ``window`` (t0, t1)
    time-averages each trajectory before averaging over the ensemble; by
    default only the final record is used.
    """
    if not cfg.stochastic:
        raise InvalidConfig("Ensembles need a stochastic scheme.")
    if n_traj < 1:
        raise InvalidConfig("n_traj must be at least 1.")
    observables = tuple(observables)
    for text in observables:
        parse_observable(text, p.n_modes)

    counts = [min(block_size, n_traj - start) for start in range(0, n_traj, block_size)]
    tasks = [(p, cfg, index, count, observables, window) for index, count in enumerate(counts)]

    if workers > 1 and len(tasks) > 1:
        with Pool(processes=min(workers, len(tasks))) as pool:
            results = pool.map(_ensemble_block, tasks)
    else:
        results = [_ensemble_block(task) for task in tasks]

    times = results[0][0]
    kept = sum(alive for _, alive, _ in results)
    discarded = n_traj - kept
    if discarded:
        logger.warning("Discarded %d of %d diverging trajectories.", discarded, n_traj)
    if kept == 0:
        raise NonFinite(float(times[-1]), discarded=discarded)

    moments, series_mean, series_var = {}, {}, {}
    for text in observables:
        s1 = np.zeros(times.shape, dtype=complex)
        s2 = np.zeros(times.shape)
        w1, w2 = 0j, 0.0
        # Fixed block order keeps the reduction bitwise reproducible.
        for _, _, sums in results:
            block_s1, block_s2, block_w1, block_w2 = sums[text]
            s1 = s1 + block_s1
            s2 = s2 + block_s2
            w1 += block_w1
            w2 += block_w2

        mean = w1 / kept
        spread = (w2 - kept * abs(mean) ** 2) / (kept - 1) if kept > 1 else 0.0
        moments[text] = Moment(complex(mean), math.sqrt(max(spread, 0.0) / kept))
        series_mean[text] = s1 / kept
        series_var[text] = (
            np.maximum(s2 - kept * np.abs(series_mean[text]) ** 2, 0.0) / (kept - 1)
            if kept > 1 else np.zeros(times.shape)
        )

    return EnsembleStats(
        n_traj=kept,
        n_discarded=discarded,
        times=times,
        moments=moments,
        series_mean=series_mean,
        series_var=series_var,
    )

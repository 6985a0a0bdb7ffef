"""
Linearized stability of the cascade steady states.

Each regime splits into small linear subsystems (drift matrix plus the
second moments of the driving noise). Noise moments are kept signed: the
positive-P phase-sum noises have negative variances and are only ever read
by formulas, never sampled.
"""
from dataclasses import dataclass, field
import logging
import math

import numpy as np

from .analytic import Regime, classify_regime, steady_state, steady_state_vector, thresholds
from .exceptions import NoConvergence, ShapeMismatch, WrongRegime, ZeroIntensity
from .model import classical_jacobian
from .params import symmetric_rates


logger = logging.getLogger(__name__)

DEFAULT_STABILITY_TOLERANCE = 1e-12
DEFAULT_ADIABATIC_RATIO_MIN = 5.0


@dataclass(frozen=True)
class LinearSubsystem:
    name: str
    matrix: np.ndarray
    variables: tuple
    noise_correlations: np.ndarray

    def __post_init__(self):
        matrix = np.atleast_2d(np.asarray(self.matrix))
        if matrix.shape[0] != matrix.shape[1]:
            raise ShapeMismatch(f"a square matrix, not {matrix.shape}", matrix.shape[1])
        if len(self.variables) != matrix.shape[0]:
            raise ShapeMismatch(matrix.shape[0], len(self.variables))
        object.__setattr__(self, 'matrix', matrix)
        object.__setattr__(self, 'noise_correlations', np.atleast_2d(np.asarray(self.noise_correlations)))


@dataclass(frozen=True)
class SubsystemResult:
    subsystem: LinearSubsystem
    eigenvalues: np.ndarray
    stable: bool
    marginal: bool


@dataclass(frozen=True)
class DiffusingPhase:
    symbol: str
    rate: float


@dataclass
class StabilityReport:
    regime: str
    subsystems: list = field(default_factory=list)
    diffusing_phases: list = field(default_factory=list)

    @property
    def overall_stable(self):
        return bool(self.subsystems) and all(result.stable for result in self.subsystems)

    @property
    def marginal(self):
        return self.regime == Regime.MARGINAL or any(result.marginal for result in self.subsystems)

    @property
    def max_real_part(self):
        if not self.subsystems:
            return math.nan
        return max(float(np.max(result.eigenvalues.real)) for result in self.subsystems)


# --- Eigenvalues ---

def eigenvalues_dense(m):
    """Eigenvalues of a small dense matrix, sorted by (real, imag)."""
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ShapeMismatch("a square matrix", m.shape)
    if not np.all(np.isfinite(m)):
        raise NoConvergence("Matrix has non-finite entries.")
    try:
        values = np.linalg.eigvals(m)
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(str(exc)) from exc
    values = np.asarray(values, dtype=complex)
    return values[np.lexsort((values.imag, values.real))]


def classify_eigenvalues(eigenvalues, tolerance=DEFAULT_STABILITY_TOLERANCE):
    """Return (stable, marginal) for a spectrum."""
    top = float(np.max(np.real(eigenvalues)))
    if abs(top) <= tolerance:
        return False, True
    return top < -tolerance, False


def evaluate(subsystem, tolerance=DEFAULT_STABILITY_TOLERANCE):
    eigenvalues = eigenvalues_dense(subsystem.matrix)
    stable, marginal = classify_eigenvalues(eigenvalues, tolerance)
    return SubsystemResult(subsystem, eigenvalues, stable, marginal)


# --- Routh-Hurwitz ---

def characteristic_cubic(matrix):
    """(a2, a1, a0) of det(lambda - M) = lambda^3 + a2 lambda^2 + a1 lambda + a0."""
    matrix = np.asarray(matrix, dtype=float)
    if matrix.shape != (3, 3):
        raise ShapeMismatch("a 3x3 matrix", matrix.shape)
    _, a2, a1, a0 = np.poly(matrix).real
    return a2, a1, a0


def routh_hurwitz_cubic(c):
    """
    True iff every root of lambda^3 + a2 lambda^2 + a1 lambda + a0 has a
    negative real part. Accepts (a2, a1, a0) or (a3, a2, a1, a0).
    """
    c = [float(x) for x in c]
    if len(c) == 4:
        if c[0] == 0:
            raise ValueError("Leading coefficient of a cubic must be nonzero.")
        c = [x / c[0] for x in c[1:]]
    if len(c) != 3:
        raise ShapeMismatch(3, len(c))
    a2, a1, a0 = c
    return a2 > 0 and a0 > 0 and a2 * a1 > a0


# --- Below threshold ---

def below_threshold_matrix(eps):
    """Drift over (alpha1, alpha2, alpha1+, alpha2+) in units of gamma."""
    if eps < 0:
        raise ValueError(f"eps must be non-negative, got {eps}.")
    matrix = np.array([
        [-1.0, 0.0, 0.0, eps],
        [0.0, -1.0, eps, 0.0],
        [0.0, eps, -1.0, 0.0],
        [eps, 0.0, 0.0, -1.0],
    ])
    noise = np.zeros((4, 4))
    noise[0, 1] = noise[1, 0] = eps
    noise[2, 3] = noise[3, 2] = eps
    return LinearSubsystem(
        'below-threshold signal/idler',
        matrix,
        ('alpha1', 'alpha2', 'alpha1+', 'alpha2+'),
        noise,
    )


# --- First above threshold ---

def _tilde_alpha_block(gamma, chi, n1):
    k = chi * math.sqrt(max(n1, 0.0))
    return np.array([
        [-gamma, 0.0, 0.0, k],
        [0.0, -gamma, k, 0.0],
        [0.0, k, -gamma, 0.0],
        [k, 0.0, 0.0, -gamma],
    ])


def _require_regime(sol, regime):
    if sol.regime != regime:
        raise WrongRegime(regime, sol.regime)


def regime2_subsystems(sol, p=None):
    """Linearized subsystems around the first-above-threshold steady state."""
    _require_regime(sol, Regime.FIRST_ABOVE)
    gamma0, gamma, chi = sol.gamma0, sol.gamma, sol.chi
    n1 = sol.intensities[1]
    k = chi * math.sqrt(n1)

    tilde_noise = np.zeros((4, 4))
    tilde_noise[0, 1] = tilde_noise[1, 0] = k
    tilde_noise[2, 3] = tilde_noise[3, 2] = k

    return [
        LinearSubsystem(
            'regime-2 intensity',
            np.array([[-gamma0, -gamma], [2.0 * chi * n1 / gamma, 0.0]]),
            ('n0', 'n+'),
            np.diag([0.0, 4.0 * gamma * n1]),
        ),
        LinearSubsystem(
            'regime-2 intensity difference',
            np.array([[-2.0 * gamma]]),
            ('n-',),
            np.array([[-4.0 * gamma * n1]]),
        ),
        LinearSubsystem(
            'regime-2 phase',
            np.array([[-gamma0, -chi ** 2 * n1 / gamma], [2.0 * gamma, -2.0 * chi]]),
            ('phi0', 'phi+'),
            np.diag([0.0, -gamma / n1]) if n1 > 0 else np.zeros((2, 2)),
        ),
        LinearSubsystem(
            'regime-2 tilde-alpha',
            _tilde_alpha_block(gamma, chi, n1),
            ('alpha3~', 'alpha4~', 'alpha3~+', 'alpha4~+'),
            tilde_noise,
        ),
    ]


def second_threshold_by_bisection(p, rel_tol=1e-13, max_iter=200):
    """
    |E0|^2 at which the regime-2 tilde-alpha block loses stability, found by
    bisection on the drive amplitude using the regime-2 intensity formula.
    """
    gamma0, gamma, chi = symmetric_rates(p)
    first, second = thresholds(p)

    def top(amplitude):
        n1 = amplitude / chi - gamma0 * gamma / chi ** 2
        return float(np.max(eigenvalues_dense(_tilde_alpha_block(gamma, chi, n1)).real))

    lo, hi = math.sqrt(first), 2.0 * math.sqrt(second)
    if not (top(lo) < 0 < top(hi)):
        raise NoConvergence("Tilde-alpha block does not change sign on the bracket.")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if top(mid) < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= rel_tol * hi:
            break
    return (0.5 * (lo + hi)) ** 2


# --- Second above threshold ---

def regime3_subsystems(sol, p=None, adiabatic_ratio_min=DEFAULT_ADIABATIC_RATIO_MIN):
    """
    Subsystems of the second-above-threshold steady state with the pump
    adiabatically eliminated; logs a warning when gamma0/gamma is too small
    for that elimination.
    """
    _require_regime(sol, Regime.SECOND_ABOVE)
    gamma0, gamma, chi = sol.gamma0, sol.gamma, sol.chi
    n1, _, n2, n3, _ = sol.intensities
    amplitude = sol.drive_amplitude

    if gamma0 / gamma < adiabatic_ratio_min:
        logger.warning(
            "gamma0/gamma = %.3g is below %.3g; regime-3 matrices assume an adiabatically eliminated pump.",
            gamma0 / gamma, adiabatic_ratio_min,
        )

    r = gamma / gamma0
    intensity = np.array([
        [-gamma * (1.0 + r), chi ** 2 * n1 * (1.0 - r) / gamma, 0.0],
        [gamma * (1.0 - r), -gamma * (1.0 + chi ** 2 / (gamma0 * gamma)), -gamma],
        [0.0, 2.0 * chi ** 2 * n3 / gamma, 0.0],
    ])
    intensity_noise = np.zeros((3, 3))
    intensity_noise[0, 1] = intensity_noise[1, 0] = 2.0 * gamma * n1
    intensity_noise[2, 2] = 4.0 * gamma * n3

    pump = chi * amplitude / gamma0
    theta = np.array([
        [-pump * (math.sqrt(n1 / n2) + math.sqrt(n2 / n1)), -chi * n3 / math.sqrt(n2)],
        [pump * math.sqrt(n1 / n2), -chi * (2.0 * math.sqrt(n2) - n3 / math.sqrt(n2))],
    ])
    theta_noise = np.array([
        [-chi ** 2 / gamma, chi ** 2 / (2.0 * gamma)],
        [chi ** 2 / (2.0 * gamma), -gamma / n3 if n3 > 0 else 0.0],
    ])

    return [
        LinearSubsystem('regime-3 intensity difference', np.array([[-2.0 * gamma]]), ('n-',),
                        np.array([[-4.0 * gamma * n3]])),
        LinearSubsystem('regime-3 intensity', intensity, ('n1', 'n2', 'n+'), intensity_noise),
        LinearSubsystem('regime-3 theta', theta, ('theta1', 'theta2'), theta_noise),
    ]


# --- Phase diffusion ---

def _phi_minus_rate(sol):
    n0, n1, n2 = sol.intensities[:3]
    for mode, n in ((1, n1), (2, n2)):
        if n <= 0:
            raise ZeroIntensity(mode)
    return sol.chi * math.sqrt(n0) / math.sqrt(n1 * n2)


def phase_diffusion_rates(sol, p=None):
    """Diffusion rates (inverse time) of the phases with no restoring force."""
    if sol.regime == Regime.FIRST_ABOVE:
        return [DiffusingPhase('phi1-phi2', _phi_minus_rate(sol))]
    if sol.regime == Regime.SECOND_ABOVE:
        n3 = sol.intensities[3]
        if n3 <= 0:
            raise ZeroIntensity(3)
        return [
            DiffusingPhase('phi1-phi2', _phi_minus_rate(sol)),
            DiffusingPhase('phi3-phi4', sol.gamma / n3),
        ]
    raise WrongRegime(f"{Regime.FIRST_ABOVE} or {Regime.SECOND_ABOVE}", sol.regime)


# --- Whole-system views ---

def full_jacobian_spectrum(sol, p):
    """Eigenvalues of the full classical Jacobian at the steady state."""
    return eigenvalues_dense(classical_jacobian(steady_state_vector(sol), p))


def analyze(p, tolerance=DEFAULT_STABILITY_TOLERANCE, marginal_tolerance=1e-9,
            adiabatic_ratio_min=DEFAULT_ADIABATIC_RATIO_MIN):
    """StabilityReport of a symmetric parameter set in whatever regime it is in."""
    regime = classify_regime(p, marginal_tolerance)
    if regime == Regime.MARGINAL:
        return StabilityReport(regime=regime)

    sol = steady_state(p, marginal_tolerance)
    if regime == Regime.BELOW_THRESHOLD:
        eps = math.sqrt(abs(p.drive) ** 2 / sol.thresholds[0])
        subsystems = [below_threshold_matrix(eps)]
        diffusing = []
    elif regime == Regime.FIRST_ABOVE:
        subsystems = regime2_subsystems(sol, p)
        diffusing = phase_diffusion_rates(sol, p)
    else:
        subsystems = regime3_subsystems(sol, p, adiabatic_ratio_min)
        diffusing = phase_diffusion_rates(sol, p)
        # theta+ has no restoring force; its noise variance is -gamma/n3, reported as a magnitude.
        diffusing.append(DiffusingPhase('phi3+phi4', sol.gamma / sol.intensities[3]))

    return StabilityReport(
        regime=regime,
        subsystems=[evaluate(s, tolerance) for s in subsystems],
        diffusing_phases=diffusing,
    )

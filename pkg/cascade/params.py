"""
Physical parameters of the cascaded OPO and their validation.

Mode 0 is the driven pump, mode 2 the intermediate pump, modes 1, 3, 4 the
down-converted signal/idlers. In the degenerate topology modes 1, 3 and 4 are
the same field and the state collapses to modes (0, 1, 2).
"""
from dataclasses import dataclass, field, replace
import math

import numpy as np
from django.db import models

from .exceptions import AsymmetricParams, NegativeCoupling, NonPositiveLossRate, ParameterError, ShapeMismatch


SYMMETRY_TOLERANCE = 1e-12


class Topology(models.TextChoices):
    NONDEGENERATE = 'NONDEGENERATE', 'Nondegenerate'
    DEGENERATE = 'DEGENERATE', 'Degenerate'


class Representation(models.TextChoices):
    CLASSICAL = 'CLASSICAL', 'Classical'
    POSITIVE_P = 'POSITIVE_P', 'Positive-P'
    WIGNER = 'WIGNER', 'Truncated Wigner'


def mode_count(topology):
    return 3 if topology == Topology.DEGENERATE else 5


def component_count(representation, topology):
    """Length of the amplitude vector for a representation/topology pair."""
    n = mode_count(topology)
    return 2 * n if representation == Representation.POSITIVE_P else n


@dataclass(frozen=True)
class SystemParams:
    """
    Loss rates, couplings, drive and detunings of the cascade.

    ``gamma`` and ``detuning`` always hold five entries; in the degenerate
    topology entries 3 and 4 must repeat entry 1.
    """
    gamma: tuple
    chi1: float
    chi2: float
    drive: complex
    detuning: tuple = (0.0, 0.0, 0.0, 0.0, 0.0)
    topology: str = Topology.NONDEGENERATE

    def __post_init__(self):
        object.__setattr__(self, 'gamma', tuple(float(g) for g in self.gamma))
        object.__setattr__(self, 'detuning', tuple(float(d) for d in self.detuning))
        object.__setattr__(self, 'chi1', float(self.chi1))
        object.__setattr__(self, 'chi2', float(self.chi2))
        object.__setattr__(self, 'drive', complex(self.drive))
        object.__setattr__(self, 'topology', Topology(self.topology))

    @property
    def n_modes(self):
        return mode_count(self.topology)

    @property
    def mode_gamma(self):
        """Loss rates of the modes actually present in the state vector."""
        return np.array(self.gamma[:self.n_modes])

    @property
    def mode_detuning(self):
        return np.array(self.detuning[:self.n_modes])

    @property
    def drive_phase(self):
        return math.atan2(self.drive.imag, self.drive.real)

    def with_drive(self, drive):
        return replace(self, drive=drive)

    def as_dict(self):
        """JSON-compatible view used by manifests and serializers."""
        return {
            'gamma': list(self.gamma),
            'chi1': self.chi1,
            'chi2': self.chi2,
            'drive': [self.drive.real, self.drive.imag],
            'detuning': list(self.detuning),
            'topology': str(self.topology),
        }


@dataclass(frozen=True)
class DimensionlessParams:
    g: float
    gamma_r: float
    epsilon: float
    tau_scale: float


def validate_params(p):
    """Return ``p`` unchanged if its physical invariants hold."""
    if len(p.gamma) != 5:
        raise ShapeMismatch(5, len(p.gamma))
    if len(p.detuning) != 5:
        raise ShapeMismatch(5, len(p.detuning))

    for index, g in enumerate(p.gamma):
        if not g > 0 or not math.isfinite(g):
            raise NonPositiveLossRate(index, g)
    for name in ('chi1', 'chi2'):
        value = getattr(p, name)
        if not value >= 0 or not math.isfinite(value):
            raise NegativeCoupling(name, value)

    if not (math.isfinite(p.drive.real) and math.isfinite(p.drive.imag)):
        raise ParameterError("Drive must be finite.", code='non_finite_drive')

    if p.topology == Topology.DEGENERATE:
        if p.gamma[3] != p.gamma[1] or p.gamma[4] != p.gamma[1]:
            raise ParameterError(
                "Degenerate topology identifies modes 1, 3 and 4; gamma3 and gamma4 must equal gamma1.",
                code='degenerate_mismatch',
            )
        if p.detuning[3] != p.detuning[1] or p.detuning[4] != p.detuning[1]:
            raise ParameterError(
                "Degenerate topology identifies modes 1, 3 and 4; their detunings must agree.",
                code='degenerate_mismatch',
            )
    return p


def _close(a, b):
    return abs(a - b) <= SYMMETRY_TOLERANCE * max(abs(a), abs(b))


def is_symmetric(p):
    g = p.gamma
    return all(_close(g[1], g[i]) for i in (2, 3, 4)) and _close(p.chi1, p.chi2)


def symmetric_rates(p):
    """
    Return (gamma0, gamma, chi) for a symmetric parameter set.

    Raises:
        AsymmetricParams: unequal signal loss rates, unequal couplings, or
            zero coupling (no finite threshold).
    """
    validate_params(p)
    if not is_symmetric(p):
        raise AsymmetricParams()
    if p.chi1 == 0:
        raise AsymmetricParams("couplings must be nonzero for a finite threshold")
    return p.gamma[0], p.gamma[1], p.chi1


def to_dimensionless(p):
    gamma0, gamma, chi = symmetric_rates(p)
    return DimensionlessParams(
        g=chi / gamma,
        gamma_r=gamma0 / gamma,
        epsilon=abs(p.drive) * chi / (gamma0 * gamma),
        tau_scale=gamma,
    )


def from_dimensionless(g, gamma_r, epsilon, gamma=1.0, drive_phase=0.0, topology=Topology.NONDEGENERATE):
    """Symmetric SystemParams realizing (g, gamma_r, epsilon) with loss rate ``gamma``."""
    chi = g * gamma
    gamma0 = gamma_r * gamma
    amplitude = epsilon * gamma0 * gamma / chi
    return validate_params(SystemParams(
        gamma=(gamma0, gamma, gamma, gamma, gamma),
        chi1=chi,
        chi2=chi,
        drive=amplitude * complex(math.cos(drive_phase), math.sin(drive_phase)),
        topology=topology,
    ))


def general_thresholds(p):
    """
    Squared drive amplitudes of the two thresholds for arbitrary loss rates.

    The second threshold is infinite when chi2 is zero; both are infinite
    when chi1 is zero.
    """
    validate_params(p)
    g0, g1, g2, g3, g4 = p.gamma
    if p.chi1 == 0:
        return math.inf, math.inf
    first = g0 * math.sqrt(g1 * g2) / p.chi1
    if p.chi2 == 0:
        return first ** 2, math.inf
    second = first + p.chi1 * (g3 * g4 / p.chi2 ** 2) * math.sqrt(g2 / g1)
    return first ** 2, second ** 2


@dataclass(frozen=True)
class Coefficients:
    """
    Array form of SystemParams consumed by the vectorized drift kernels.

    Every field broadcasts against the leading (batch) axes of an amplitude
    array; ``stack`` builds per-trajectory coefficients for batched sweeps.
    """
    gamma: np.ndarray
    detuning: np.ndarray
    chi1: np.ndarray
    chi2: np.ndarray
    drive: np.ndarray
    topology: str = field(default=Topology.NONDEGENERATE)

    @classmethod
    def of(cls, p):
        return cls(
            gamma=p.mode_gamma,
            detuning=p.mode_detuning,
            chi1=np.float64(p.chi1),
            chi2=np.float64(p.chi2),
            drive=np.complex128(p.drive),
            topology=p.topology,
        )

    @classmethod
    def stack(cls, params):
        topologies = {p.topology for p in params}
        if len(topologies) != 1:
            raise ParameterError("Cannot batch parameter sets of different topologies.", code='mixed_topology')
        return cls(
            gamma=np.array([p.mode_gamma for p in params]),
            detuning=np.array([p.mode_detuning for p in params]),
            chi1=np.array([p.chi1 for p in params]),
            chi2=np.array([p.chi2 for p in params]),
            drive=np.array([p.drive for p in params], dtype=complex),
            topology=topologies.pop(),
        )

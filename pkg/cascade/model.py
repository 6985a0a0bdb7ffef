"""
Drift and diffusion of the cascade in the classical, positive-P and truncated
Wigner descriptions.

The public functions take a PhaseSpaceState; the ``*_array`` kernels take raw
amplitude arrays with arbitrary leading batch axes (last axis = components)
and are what the integrators call.
"""
from dataclasses import dataclass

import numpy as np

from .exceptions import ParameterError, ShapeMismatch
from .params import Coefficients, Representation, Topology, component_count, mode_count


@dataclass(frozen=True)
class PhaseSpaceState:
    representation: str
    amplitudes: np.ndarray
    topology: str = Topology.NONDEGENERATE

    def __post_init__(self):
        object.__setattr__(self, 'representation', Representation(self.representation))
        object.__setattr__(self, 'topology', Topology(self.topology))
        amplitudes = np.asarray(self.amplitudes, dtype=complex)
        expected = component_count(self.representation, self.topology)
        if amplitudes.shape != (expected,):
            raise ShapeMismatch(expected, amplitudes.shape[-1] if amplitudes.ndim else 0)
        object.__setattr__(self, 'amplitudes', amplitudes)

    @property
    def n_modes(self):
        return mode_count(self.topology)

    @property
    def alpha(self):
        return self.amplitudes[:self.n_modes]

    @property
    def alpha_plus(self):
        """The conjugate-sector amplitudes (alpha* outside positive-P)."""
        if self.representation == Representation.POSITIVE_P:
            return self.amplitudes[self.n_modes:]
        return np.conj(self.amplitudes)

    def intensities(self):
        return (self.alpha * self.alpha_plus).real


def state_for(representation, amplitudes, topology=Topology.NONDEGENERATE):
    return PhaseSpaceState(representation, np.asarray(amplitudes, dtype=complex), topology)


def vacuum_state(representation, topology=Topology.NONDEGENERATE):
    return PhaseSpaceState(representation, np.zeros(component_count(representation, topology), dtype=complex), topology)


def to_positive_p(s):
    """Map a classical or Wigner state onto the positive-P manifold alpha+ = alpha*."""
    if s.representation == Representation.POSITIVE_P:
        return s
    return PhaseSpaceState(
        Representation.POSITIVE_P,
        np.concatenate([s.amplitudes, np.conj(s.amplitudes)]),
        s.topology,
    )


def _require(s, *representations):
    if s.representation not in representations:
        raise ParameterError(
            "Expected a %(expected)s state, got %(got)s.",
            code='wrong_representation',
            params={'expected': '/'.join(str(r) for r in representations), 'got': s.representation},
        )


def _field(a, b, c, drive, sign):
    """
    Drift of one sector, with ``b`` standing where alpha* appears.

    ``sign`` flips the detuning rotation between the alpha and alpha+ sectors.
    """
    d = -(c.gamma + 1j * sign * c.detuning) * a
    a0, a1, a2 = a[..., 0], a[..., 1], a[..., 2]
    b1, b2 = b[..., 1], b[..., 2]

    if c.topology == Topology.DEGENERATE:
        d[..., 0] += drive - c.chi1 * a1 * a2
        d[..., 1] += c.chi1 * a0 * b2 + c.chi2 * a2 * b1
        d[..., 2] += c.chi1 * a0 * b1 - 0.5 * c.chi2 * a1 * a1
        return d

    a3, a4 = a[..., 3], a[..., 4]
    b3, b4 = b[..., 3], b[..., 4]
    d[..., 0] += drive - c.chi1 * a1 * a2
    d[..., 1] += c.chi1 * a0 * b2
    d[..., 2] += c.chi1 * a0 * b1 - c.chi2 * a3 * a4
    d[..., 3] += c.chi2 * a2 * b4
    d[..., 4] += c.chi2 * a2 * b3
    return d


def drift_array(representation, amplitudes, c):
    """Deterministic drift for an amplitude array of shape (..., components)."""
    if representation == Representation.POSITIVE_P:
        n = mode_count(c.topology)
        a, ap = amplitudes[..., :n], amplitudes[..., n:]
        return np.concatenate(
            [_field(a, ap, c, c.drive, 1.0), _field(ap, a, c, np.conj(c.drive), -1.0)],
            axis=-1,
        )
    return _field(amplitudes, np.conj(amplitudes), c, c.drive, 1.0)


def classical_drift(s, p):
    _require(s, Representation.CLASSICAL)
    _check_topology(s, p)
    return drift_array(s.representation, s.amplitudes, Coefficients.of(p))


def positive_p_drift(s, p):
    _require(s, Representation.POSITIVE_P)
    _check_topology(s, p)
    return drift_array(s.representation, s.amplitudes, Coefficients.of(p))


def wigner_drift(s, p):
    _require(s, Representation.WIGNER)
    _check_topology(s, p)
    return drift_array(s.representation, s.amplitudes, Coefficients.of(p))


def _check_topology(s, p):
    if s.topology != p.topology:
        raise ShapeMismatch(component_count(s.representation, p.topology), s.amplitudes.shape[0])


def noise_pairs(topology):
    """
    Index pairs receiving correlated positive-P noise, in the order of
    ``positive_p_noise_coefficients``. A pair (i, i) is a single real noise.
    """
    if topology == Topology.DEGENERATE:
        return ((1, 2), (4, 5), (1, 1), (4, 4))
    return ((1, 2), (3, 4), (6, 7), (8, 9))


def positive_p_noise_array(amplitudes, c):
    """Principal-branch noise amplitudes, shape (..., 4), ordered as ``noise_pairs``."""
    n = mode_count(c.topology)
    a, ap = amplitudes[..., :n], amplitudes[..., n:]
    if c.topology == Topology.DEGENERATE:
        columns = (c.chi1 * a[..., 0], c.chi1 * ap[..., 0], c.chi2 * a[..., 2], c.chi2 * ap[..., 2])
    else:
        columns = (c.chi1 * a[..., 0], c.chi2 * a[..., 2], c.chi1 * ap[..., 0], c.chi2 * ap[..., 2])
    return np.sqrt(np.stack(columns, axis=-1).astype(complex))


def positive_p_noise_coefficients(s, p):
    """List of ((i, j), amplitude) with indices into the positive-P vector."""
    _require(s, Representation.POSITIVE_P)
    _check_topology(s, p)
    amplitudes = positive_p_noise_array(s.amplitudes, Coefficients.of(p))
    return [(pair, complex(value)) for pair, value in zip(noise_pairs(p.topology), amplitudes)]


def wigner_noise_coefficients(p):
    return np.sqrt(p.mode_gamma)


def classical_jacobian(s, p):
    """
    Real Jacobian of the classical drift in (Re alpha_0.., Im alpha_0..) order.

    Built from the Wirtinger derivatives A = df/d(alpha), B = df/d(alpha*).
    """
    _require(s, Representation.CLASSICAL)
    _check_topology(s, p)
    n = p.n_modes
    a = s.amplitudes
    b = np.conj(a)
    g = p.mode_gamma + 1j * p.mode_detuning
    chi1, chi2 = p.chi1, p.chi2

    A = np.diag(-g).astype(complex)
    B = np.zeros((n, n), dtype=complex)

    A[0, 1] = -chi1 * a[2]
    A[0, 2] = -chi1 * a[1]
    A[1, 0] = chi1 * b[2]
    B[1, 2] = chi1 * a[0]
    A[2, 0] = chi1 * b[1]
    B[2, 1] = chi1 * a[0]

    if p.topology == Topology.DEGENERATE:
        A[1, 2] += chi2 * b[1]
        B[1, 1] += chi2 * a[2]
        A[2, 1] += -chi2 * a[1]
    else:
        A[2, 3] = -chi2 * a[4]
        A[2, 4] = -chi2 * a[3]
        A[3, 2] = chi2 * b[4]
        B[3, 4] = chi2 * a[2]
        A[4, 2] = chi2 * b[3]
        B[4, 3] = chi2 * a[2]

    plus, minus = A + B, A - B
    return np.block([
        [plus.real, -minus.imag],
        [plus.imag, minus.real],
    ])

"""
Truncated Fock-space master equation, used as a brute-force reference for
the phase-space moments at low photon number.

Basis ordering is row-major over modes with mode 0 slowest. Ladder operators
are scipy.sparse matrices; the density matrix stays dense and the
Liouvillian is applied as sparse-dense products.
"""
from dataclasses import dataclass
from functools import lru_cache
import logging
import math

import numpy as np
import scipy.sparse as sp

from .conf import opo_setting
from .exceptions import CutoffSaturation, DimensionCap, ParameterError, ShapeMismatch
from .observables import parse_observable
from .params import Topology, mode_count


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FockConfig:
    cutoffs: tuple
    topology: str = Topology.NONDEGENERATE
    dimension_cap: int = None

    def __post_init__(self):
        if self.dimension_cap is None:
            object.__setattr__(self, 'dimension_cap', opo_setting('OPO_FOCK_DIMENSION_CAP'))
        object.__setattr__(self, 'cutoffs', tuple(int(n) for n in self.cutoffs))
        object.__setattr__(self, 'topology', Topology(self.topology))
        if len(self.cutoffs) != mode_count(self.topology):
            raise ShapeMismatch(mode_count(self.topology), len(self.cutoffs))
        if any(n < 1 for n in self.cutoffs):
            raise ParameterError("Fock cutoffs must be at least 1.", code='invalid_cutoff')

    @property
    def dimension(self):
        return math.prod(n + 1 for n in self.cutoffs)


def build_ladder_operators(cfg):
    """Per-mode annihilation operators on the full truncated space (CSR)."""
    if cfg.dimension > cfg.dimension_cap:
        raise DimensionCap(cfg.dimension, cfg.dimension_cap)
    operators = []
    for mode, cutoff in enumerate(cfg.cutoffs):
        factors = [sp.identity(n + 1, format='csr') for n in cfg.cutoffs]
        factors[mode] = sp.diags(np.sqrt(np.arange(1, cutoff + 1, dtype=float)), 1, format='csr')
        op = factors[0]
        for factor in factors[1:]:
            op = sp.kron(op, factor, format='csr')
        operators.append(op.astype(complex))
    return operators


@dataclass(frozen=True)
class _Liouvillian:
    """
    d rho/dt = M rho - rho N + sum_i 2 gamma_i a_i rho a_i^dagger with
    M = K - sum gamma_i n_i and N = K + sum gamma_i n_i, K the anti-Hermitian
    drive/coupling generator.
    """
    left: sp.csr_matrix
    right_t: sp.csr_matrix
    jumps: tuple
    top_mask: np.ndarray

    def apply(self, rho):
        out = self.left @ rho - (self.right_t @ rho.T).T
        for rate, a in self.jumps:
            out += 2.0 * rate * (a @ (a @ rho).conj().T).conj().T
        return out


def _generator(p, cfg, ops):
    dag = [a.conj().T.tocsr() for a in ops]
    drive = p.drive
    k = drive * dag[0] - np.conj(drive) * ops[0]

    if cfg.topology == Topology.DEGENERATE:
        pair = ops[0] @ dag[1] @ dag[2]
        k = k + p.chi1 * (pair - pair.conj().T)
        squeeze = ops[2] @ dag[1] @ dag[1]
        k = k + 0.5 * p.chi2 * (squeeze - squeeze.conj().T)
    else:
        first = ops[0] @ dag[1] @ dag[2]
        second = ops[2] @ dag[3] @ dag[4]
        k = k + p.chi1 * (first - first.conj().T) + p.chi2 * (second - second.conj().T)

    for detuning, a, ad in zip(p.mode_detuning, ops, dag):
        if detuning:
            k = k - 1j * detuning * (ad @ a)
    return k.tocsr(), dag


@lru_cache(maxsize=8)
def _liouvillian(p, cfg):
    ops = build_ladder_operators(cfg)
    k, dag = _generator(p, cfg, ops)
    damping = sum(rate * (ad @ a) for rate, a, ad in zip(p.mode_gamma, ops, dag))
    left = (k - damping).tocsr()
    right = (k + damping).tocsr()

    levels = np.indices([n + 1 for n in cfg.cutoffs]).reshape(len(cfg.cutoffs), -1)
    top = np.any(levels == np.array(cfg.cutoffs)[:, None], axis=0)
    return _Liouvillian(
        left=left,
        right_t=right.T.tocsr(),
        jumps=tuple((rate, a) for rate, a in zip(p.mode_gamma, ops)),
        top_mask=top,
    )


def _check_config(p, cfg):
    if p.topology != cfg.topology:
        raise ShapeMismatch(mode_count(p.topology), len(cfg.cutoffs))


def liouvillian_apply(rho, p, cfg):
    _check_config(p, cfg)
    return _liouvillian(p, cfg).apply(np.asarray(rho, dtype=complex))


def vacuum_density(cfg):
    rho = np.zeros((cfg.dimension, cfg.dimension), dtype=complex)
    rho[0, 0] = 1.0
    return rho


def coherent_state(cfg, amplitudes):
    """Pure product coherent state |alpha_0, alpha_1, ..> truncated and renormalized."""
    if len(amplitudes) != len(cfg.cutoffs):
        raise ShapeMismatch(len(cfg.cutoffs), len(amplitudes))
    vector = np.ones(1, dtype=complex)
    for alpha, cutoff in zip(amplitudes, cfg.cutoffs):
        n = np.arange(cutoff + 1)
        factorials = np.array([math.factorial(int(k)) for k in n], dtype=float)
        mode = np.exp(-abs(alpha) ** 2 / 2.0) * alpha ** n / np.sqrt(factorials)
        vector = np.kron(vector, mode)
    vector /= np.linalg.norm(vector)
    return np.outer(vector, vector.conj())


def top_level_population(rho, p, cfg):
    """Total population of basis states with any mode at its cutoff."""
    return float(np.real(np.diag(rho))[_liouvillian(p, cfg).top_mask].sum())


def check_density(rho, tolerance=1e-10, positivity=1e-8):
    """Residuals of the density-matrix invariants and whether all are within tolerance."""
    rho = np.asarray(rho)
    hermiticity = float(np.max(np.abs(rho - rho.conj().T)))
    trace_error = float(abs(np.trace(rho) - 1.0))
    min_eigenvalue = float(np.min(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))))
    return {
        'hermiticity': hermiticity,
        'trace_error': trace_error,
        'min_eigenvalue': min_eigenvalue,
        'ok': hermiticity <= tolerance and trace_error <= tolerance and min_eigenvalue >= -positivity,
    }


def evolve_master(rho0, p, cfg, t_end, dt, saturation=None):
    """
    RK4 evolution of the master equation to ``t_end``.

    ``saturation`` defaults to the OPO_FOCK_SATURATION setting.

    Raises:
        CutoffSaturation: the top-level population exceeded ``saturation``
            at any step.
    """
    _check_config(p, cfg)
    lv = _liouvillian(p, cfg)
    if saturation is None:
        saturation = opo_setting('OPO_FOCK_SATURATION')
    rho = np.array(rho0, dtype=complex, copy=True)
    steps = int(round(t_end / dt))
    worst = top_level_population(rho, p, cfg)

    for _ in range(steps):
        k1 = lv.apply(rho)
        k2 = lv.apply(rho + 0.5 * dt * k1)
        k3 = lv.apply(rho + 0.5 * dt * k2)
        k4 = lv.apply(rho + dt * k3)
        rho = rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        rho = 0.5 * (rho + rho.conj().T)
        worst = max(worst, float(np.real(np.diag(rho))[lv.top_mask].sum()))

    if worst > saturation:
        raise CutoffSaturation(worst, saturation)
    if worst > 0.1 * saturation:
        logger.warning("Top Fock level population reached %.3e (alarm at %.1e).", worst, saturation)
    return rho


def operator_for(spec, cfg):
    """Sparse operator for a normally ordered product such as ``"a1^+ a1"``."""
    observable = parse_observable(spec, len(cfg.cutoffs))
    if observable.is_phase:
        raise ParameterError("Phase observables have no Fock-space operator.", code='invalid_observable')
    ops = build_ladder_operators(cfg)
    product = sp.identity(cfg.dimension, dtype=complex, format='csr')
    for mode, dagger in observable.factors:
        product = product @ (ops[mode].conj().T if dagger else ops[mode])
    return product.tocsr()


def expect(rho, spec, cfg):
    """tr(rho O) for the product ``spec``."""
    operator = operator_for(spec, cfg)
    return complex(operator.multiply(np.asarray(rho).T).sum())

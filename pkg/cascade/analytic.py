"""
Closed-form thresholds and steady states for the symmetric cascade
(gamma1 = .. = gamma4 = gamma, chi1 = chi2 = chi).

Intensities are photon numbers n_i = |alpha_i|^2. Phases are reported as
linear constraints over (phi0, phi1, phi2, phi3, phi4, phi_drive).
"""
from dataclasses import dataclass
import math

import numpy as np
from django.db import models

from .exceptions import MarginalDrive, ParameterError
from .model import PhaseSpaceState
from .params import Representation, Topology, symmetric_rates


DEFAULT_MARGINAL_TOLERANCE = 1e-9


class Regime(models.TextChoices):
    BELOW_THRESHOLD = 'BELOW_THRESHOLD', 'Below threshold'
    FIRST_ABOVE = 'FIRST_ABOVE', 'Above the first threshold'
    SECOND_ABOVE = 'SECOND_ABOVE', 'Above the second threshold'
    MARGINAL = 'MARGINAL', 'Marginal'


@dataclass(frozen=True)
class PhaseConstraint:
    """sum(coefficients[k] * phi_k) == target, with phi_5 the drive phase."""
    coefficients: tuple
    target: float
    label: str = ''


_PUMP_LOCK = PhaseConstraint((1, 0, 0, 0, 0, -1), 0.0, 'phi0 = phi_drive')
_FIRST_STAGE = PhaseConstraint((-1, 1, 1, 0, 0, 0), 0.0, 'phi1 + phi2 = phi0')
_SECOND_STAGE = PhaseConstraint((0, 0, -1, 1, 1, 0), 0.0, 'phi3 + phi4 - phi2 = 0')


@dataclass(frozen=True)
class RegimeSolution:
    regime: str
    intensities: tuple
    phase_constraints: tuple
    free_phases: tuple
    thresholds: tuple
    drive_amplitude: float = 0.0
    drive_phase: float = 0.0
    gamma0: float = 0.0
    gamma: float = 0.0
    chi: float = 0.0

    @property
    def critical_intensity(self):
        """n0 at the first threshold, gamma^2/chi^2."""
        return self.gamma ** 2 / self.chi ** 2


def _rates(p):
    if p.topology != Topology.NONDEGENERATE:
        raise ParameterError(
            "Closed-form steady states exist only for the nondegenerate cascade.",
            code='degenerate_topology',
        )
    return symmetric_rates(p)


def thresholds(p):
    """(|E_thr,1|^2, |E_thr,2|^2) for symmetric parameters."""
    gamma0, gamma, chi = _rates(p)
    first = gamma0 ** 2 * gamma ** 2 / chi ** 2
    return first, first * (1.0 + gamma / gamma0) ** 2


def _classify(drive_sq, first, second, tolerance):
    if abs(drive_sq - first) <= tolerance * first or abs(drive_sq - second) <= tolerance * second:
        return Regime.MARGINAL
    if drive_sq < first:
        return Regime.BELOW_THRESHOLD
    if drive_sq < second:
        return Regime.FIRST_ABOVE
    return Regime.SECOND_ABOVE


def classify_regime(p, tolerance=DEFAULT_MARGINAL_TOLERANCE):
    first, second = thresholds(p)
    return _classify(abs(p.drive) ** 2, first, second, tolerance)


def _intensities(regime, amplitude, gamma0, gamma, chi):
    if regime == Regime.BELOW_THRESHOLD:
        return (amplitude ** 2 / gamma0 ** 2, 0.0, 0.0, 0.0, 0.0)
    if regime == Regime.FIRST_ABOVE:
        n1 = amplitude / chi - gamma0 * gamma / chi ** 2
        return (gamma ** 2 / chi ** 2, n1, n1, 0.0, 0.0)
    n1 = amplitude ** 2 / (gamma0 + gamma) ** 2
    n2 = gamma ** 2 / chi ** 2
    n3 = n1 - n2
    return (n1, n1, n2, n3, n3)


def steady_state(p, tolerance=DEFAULT_MARGINAL_TOLERANCE):
    gamma0, gamma, chi = _rates(p)
    first, second = thresholds(p)
    amplitude = abs(p.drive)
    regime = _classify(amplitude ** 2, first, second, tolerance)
    if regime == Regime.MARGINAL:
        nearest = first if abs(amplitude ** 2 - first) <= abs(amplitude ** 2 - second) else second
        raise MarginalDrive(amplitude ** 2, nearest)

    if regime == Regime.BELOW_THRESHOLD:
        constraints, free = (_PUMP_LOCK,), ()
    elif regime == Regime.FIRST_ABOVE:
        constraints, free = (_PUMP_LOCK, _FIRST_STAGE), ('phi1-phi2',)
    else:
        constraints, free = (_PUMP_LOCK, _FIRST_STAGE, _SECOND_STAGE), ('phi1-phi2', 'phi3-phi4')

    return RegimeSolution(
        regime=regime,
        intensities=_intensities(regime, amplitude, gamma0, gamma, chi),
        phase_constraints=constraints,
        free_phases=free,
        thresholds=(first, second),
        drive_amplitude=amplitude,
        drive_phase=p.drive_phase,
        gamma0=gamma0,
        gamma=gamma,
        chi=chi,
    )


def steady_state_vector(sol, drive_phase=None):
    """
    Classical state realizing ``sol`` with the free phases set to zero:
    phi0 = phi1 = phi_drive and phi2 = phi3 = phi4 = 0.
    """
    phase = sol.drive_phase if drive_phase is None else drive_phase
    phases = np.array([phase, phase, 0.0, 0.0, 0.0])
    amplitudes = np.sqrt(np.asarray(sol.intensities)) * np.exp(1j * phases)
    return PhaseSpaceState(Representation.CLASSICAL, amplitudes)


@dataclass(frozen=True)
class SweepRow:
    epsilon_sq: float
    scaled: tuple
    regime: str


def sweep_curve(p_template, epsilon_sq_grid):
    """
    Scaled intensities n_i / (gamma^2/chi^2) over a grid of epsilon^2.

    Points on a threshold use the formula of the regime below it; both
    formulas agree there.
    """
    gamma0, gamma, chi = _rates(p_template)
    first = gamma0 ** 2 * gamma ** 2 / chi ** 2
    second = first * (1.0 + gamma / gamma0) ** 2
    critical = gamma ** 2 / chi ** 2

    rows = []
    for eps_sq in epsilon_sq_grid:
        eps_sq = float(eps_sq)
        if eps_sq < 0:
            raise ValueError(f"epsilon^2 must be non-negative, got {eps_sq}.")
        drive_sq = eps_sq * first
        regime = _classify(drive_sq, first, second, 0.0)
        if drive_sq == first:
            regime = Regime.BELOW_THRESHOLD
        elif drive_sq == second:
            regime = Regime.FIRST_ABOVE
        values = _intensities(regime, math.sqrt(drive_sq), gamma0, gamma, chi)
        rows.append(SweepRow(eps_sq, tuple(v / critical for v in values), regime))
    return rows

"""
Textual observables shared by the phase-space ensembles and the Fock oracle.

A product is a space-separated list of ladder factors, ``a<i>`` for an
annihilator and ``a<i>^+`` (or ``a<i>+``) for a creator, e.g. ``"a1^+ a1"``
or ``"a1 a3 a4"``. ``n<i>`` abbreviates ``a<i>^+ a<i>``. ``phase:<i>-<j>``
(alias ``phase_var:<i>-<j>``) is the unwrapped phase difference, a
phase-space-only observable.
"""
from dataclasses import dataclass
import re

import numpy as np

from .exceptions import ParameterError


_FACTOR = re.compile(r'^a(\d+)(\^\+|\+|†)?$')
_NUMBER = re.compile(r'^n(\d+)$')
_PHASE = re.compile(r'^phase(?:_var)?:(\d+)-(\d+)$')


@dataclass(frozen=True)
class Observable:
    text: str
    factors: tuple = ()
    phase_pair: tuple = None

    @property
    def is_phase(self):
        return self.phase_pair is not None

    def modes(self):
        if self.is_phase:
            return set(self.phase_pair)
        return {mode for mode, _ in self.factors}


def _bad(text, n_modes):
    return ParameterError(
        "Cannot parse observable %(text)r for %(n)s modes.",
        code='invalid_observable',
        params={'text': text, 'n': n_modes},
    )


def parse_observable(text, n_modes=5):
    text = text.strip()
    phase = _PHASE.match(text)
    if phase:
        pair = (int(phase.group(1)), int(phase.group(2)))
        if max(pair) >= n_modes:
            raise _bad(text, n_modes)
        return Observable(text, phase_pair=pair)

    number = _NUMBER.match(text)
    if number:
        mode = int(number.group(1))
        if mode >= n_modes:
            raise _bad(text, n_modes)
        return Observable(text, factors=((mode, True), (mode, False)))

    factors = []
    for token in text.split():
        match = _FACTOR.match(token)
        if not match or int(match.group(1)) >= n_modes:
            raise _bad(text, n_modes)
        factors.append((int(match.group(1)), match.group(2) is not None))
    if not factors:
        raise _bad(text, n_modes)
    return Observable(text, factors=tuple(factors))


def evaluate_product(observable, alpha, alpha_plus):
    """Stochastic estimator of a normally ordered product over (..., modes) arrays."""
    value = np.ones(alpha.shape[:-1], dtype=complex)
    for mode, dagger in observable.factors:
        value = value * (alpha_plus[..., mode] if dagger else alpha[..., mode])
    return value

"""
Error taxonomy for the cascade app.

Bad input (parameters, scenario files, regime mismatches) is reported with
subclasses of Django's ValidationError so scenario serializers and management
commands can surface ``code`` and ``params`` uniformly. Failures of a
computation on valid input derive from SimulationError.
"""
from django.core.exceptions import ValidationError


class ParameterError(ValidationError):
    """Base class for invalid physical parameters or configuration."""


class NonPositiveLossRate(ParameterError):
    def __init__(self, index, value):
        super().__init__(
            "Loss rate gamma[%(index)s] must be positive, got %(value)s.",
            code='non_positive_loss_rate',
            params={'index': index, 'value': value},
        )
        self.index = index


class NegativeCoupling(ParameterError):
    def __init__(self, name, value):
        super().__init__(
            "Coupling %(name)s must be non-negative, got %(value)s.",
            code='negative_coupling',
            params={'name': name, 'value': value},
        )
        self.name = name


class AsymmetricParams(ParameterError):
    """The closed-form results need gamma1..4 equal and chi1 == chi2."""

    def __init__(self, detail="loss rates gamma1..gamma4 and couplings chi1, chi2 must be equal"):
        super().__init__(
            "Symmetric parameters required: %(detail)s.",
            code='asymmetric_params',
            params={'detail': detail},
        )


class ShapeMismatch(ParameterError):
    def __init__(self, expected, got):
        super().__init__(
            "Expected %(expected)s components, got %(got)s.",
            code='shape_mismatch',
            params={'expected': expected, 'got': got},
        )
        self.expected = expected
        self.got = got


class MarginalDrive(ParameterError):
    """|E0|^2 sits inside the marginal band around a threshold."""

    def __init__(self, drive_sq, threshold_sq):
        super().__init__(
            "|E0|^2 = %(drive_sq)s is marginal to the threshold %(threshold_sq)s.",
            code='marginal_drive',
            params={'drive_sq': drive_sq, 'threshold_sq': threshold_sq},
        )


class WrongRegime(ParameterError):
    def __init__(self, expected, got):
        super().__init__(
            "Operation needs regime %(expected)s, solution is %(got)s.",
            code='wrong_regime',
            params={'expected': expected, 'got': got},
        )


class InvalidConfig(ParameterError):
    def __init__(self, message):
        super().__init__("%(message)s", code='invalid_config', params={'message': message})


class InvalidScenario(ParameterError):
    def __init__(self, path, detail):
        super().__init__(
            "Scenario %(path)s is invalid: %(detail)s",
            code='invalid_scenario',
            params={'path': path, 'detail': detail},
        )
        self.path = path
        self.detail = detail


class SimulationError(Exception):
    """A computation on valid input could not produce a trustworthy result."""


class NoConvergence(SimulationError):
    pass


class NonFinite(SimulationError):
    def __init__(self, time, discarded=0):
        self.time = time
        self.discarded = discarded
        super().__init__(f"State became non-finite or diverged at t = {time!r}.")


class CutoffSaturation(SimulationError):
    def __init__(self, population, threshold):
        self.population = population
        self.threshold = threshold
        super().__init__(
            f"Top Fock level population {population:.3e} exceeds {threshold:.1e}; raise the cutoffs."
        )


class DimensionCap(SimulationError):
    def __init__(self, dimension, cap):
        self.dimension = dimension
        self.cap = cap
        super().__init__(f"Fock dimension {dimension} exceeds the cap {cap}.")


class NotAtSteadyState(SimulationError):
    def __init__(self, drift_norm, time):
        self.drift_norm = drift_norm
        self.time = time
        super().__init__(f"Drift norm {drift_norm:.3e} at t = {time} is not a steady state.")


class InsufficientEnsemble(SimulationError):
    def __init__(self, count, minimum):
        self.count = count
        self.minimum = minimum
        super().__init__(f"Ensemble of {count} trajectories is below the minimum {minimum}.")


class ZeroIntensity(SimulationError):
    def __init__(self, mode):
        self.mode = mode
        super().__init__(f"Steady-state intensity of mode {mode} is zero.")

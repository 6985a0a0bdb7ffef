"""
Access to the OPO_* settings.

Code that runs inside ensemble workers never reads settings: callers resolve
values here and pass them down explicitly, so workers started with ``spawn``
do not need a configured Django. The Fock-space oracle runs in the calling
process and falls back to its OPO_FOCK_* settings when no value is passed.
"""
from django.conf import settings
from django.core.exceptions import ImproperlyConfigured


# Type each setting must coerce to, and whether it must be strictly positive.
_SPECS = {
    'OPO_OUT_DIR': (str, False),
    'OPO_WORKERS': (int, True),
    'OPO_ENSEMBLE_BLOCK': (int, True),
    'OPO_MARGINAL_TOLERANCE': (float, True),
    'OPO_STABILITY_TOLERANCE': (float, True),
    'OPO_ADIABATIC_RATIO_MIN': (float, True),
    'OPO_DIVERGENCE_BOUND': (float, True),
    'OPO_VACUUM_SEED': (float, True),
    'OPO_FOCK_DIMENSION_CAP': (int, True),
    'OPO_FOCK_SATURATION': (float, True),
    'OPO_RECORD_RUNS': (bool, False),
}


def opo_setting(name):
    """
    Return the value of an OPO_* setting, coerced to its declared type.

    Raises:
        ImproperlyConfigured: unknown name, missing setting, or a value that
            does not coerce / is not positive where it must be.
    """
    if name not in _SPECS:
        raise ImproperlyConfigured(f"Unknown cascade setting '{name}'.")
    kind, positive = _SPECS[name]

    value = getattr(settings, name, None)
    if value is None:
        raise ImproperlyConfigured(f"The {name} setting must be defined.")

    try:
        value = kind(value)
    except (TypeError, ValueError) as exc:
        raise ImproperlyConfigured(f"{name} must be a {kind.__name__}, got {value!r}.") from exc

    if positive and value <= 0:
        raise ImproperlyConfigured(f"{name} must be positive, got {value!r}.")
    return value

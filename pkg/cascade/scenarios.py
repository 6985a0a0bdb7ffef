"""
Scenario files.

A scenario is an INI file with ``[scenario]`` (name, description),
``[params]``, ``[integrator]`` and ``[protocol]`` sections; ``#`` and ``;``
start comments. Bare names resolve to the bundled ``cascade/library/*.scn``.
"""
import configparser
import logging
from pathlib import Path

from django.core.exceptions import ValidationError

from .conf import opo_setting
from .exceptions import InvalidScenario
from .experiments import Scenario
from .serializers import IntegratorSerializer, ParamsSerializer, ProtocolSerializer


logger = logging.getLogger(__name__)

BUNDLED_DIR = Path(__file__).resolve().parent / 'library'
SUFFIX = '.scn'


def list_bundled():
    return sorted(path.stem for path in BUNDLED_DIR.glob(f'*{SUFFIX}'))


def resolve_path(path_or_name):
    path = Path(path_or_name)
    if path.is_file():
        return path
    bundled = BUNDLED_DIR / (path.name if path.suffix == SUFFIX else f'{path.name}{SUFFIX}')
    if path.parent == Path('.') and bundled.is_file():
        return bundled
    raise InvalidScenario(str(path_or_name), "no such file or bundled scenario")


def _errors(serializer):
    return '; '.join(
        f"{field}: {' '.join(str(m) for m in messages)}" if isinstance(messages, list) else f"{field}: {messages}"
        for field, messages in serializer.errors.items()
    )


def _section(parser, name, path, required=True):
    if not parser.has_section(name):
        if required:
            raise InvalidScenario(path, f"missing [{name}] section")
        return {}
    return dict(parser.items(name))


def load_scenario(path_or_name, seed=None, vacuum_seed=None, divergence_bound=None):
    """
    Parse and validate a scenario.

    ``seed`` overrides the noise seed (the ``--seed`` flag); seed phases keep
    the file's ``phase_seed`` so classical runs do not move.

    Raises:
        InvalidScenario: unreadable file, missing section, or a value that
            fails validation.
    """
    path = resolve_path(path_or_name)
    label = str(path)
    parser = configparser.ConfigParser(inline_comment_prefixes=('#', ';'), interpolation=None)
    try:
        with open(path, encoding='utf-8') as handle:
            parser.read_file(handle)
    except (OSError, configparser.Error) as exc:
        raise InvalidScenario(label, str(exc)) from exc

    meta = _section(parser, 'scenario', label, required=False)

    params = ParamsSerializer(data=_section(parser, 'params', label))
    if not params.is_valid():
        raise InvalidScenario(label, _errors(params))
    p = params.validated_data['system']

    integrator = IntegratorSerializer(data=_section(parser, 'integrator', label))
    if not integrator.is_valid():
        raise InvalidScenario(label, _errors(integrator))

    protocol = ProtocolSerializer(data=_section(parser, 'protocol', label, required=False))
    if not protocol.is_valid():
        raise InvalidScenario(label, _errors(protocol))

    if vacuum_seed is None:
        vacuum_seed = opo_setting('OPO_VACUUM_SEED')
    if divergence_bound is None:
        divergence_bound = opo_setting('OPO_DIVERGENCE_BOUND')

    try:
        config = integrator.build(p, vacuum_seed, divergence_bound, seed=seed)
        scenario = Scenario(
            name=meta.get('name', path.stem),
            params=p,
            config=config,
            protocol=protocol.build(),
            path=label,
            description=meta.get('description', ''),
        )
    except ValidationError as exc:
        raise InvalidScenario(label, ' '.join(exc.messages)) from exc

    logger.debug("Loaded scenario %s from %s", scenario.name, label)
    return scenario

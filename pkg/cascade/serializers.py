import math

from rest_framework import serializers

from .analytic import steady_state, steady_state_vector
from .exceptions import ParameterError
from .experiments import EnsembleMoments, Perturb, Sweep, Trace
from .integrate import IntegratorConfig, KickTarget, Scheme, Vacuum, VacuumSeed
from .model import PhaseSpaceState, to_positive_p
from .models import RunManifest
from .params import Representation, SystemParams, Topology, general_thresholds, validate_params


# --- Fields for INI-style values ---
class FloatListField(serializers.ListField):
    """Accepts ``"1, 2, 3"`` as well as a real list."""
    child = serializers.FloatField()

    def to_internal_value(self, data):
        if isinstance(data, str):
            data = [item for item in (part.strip() for part in data.split(',')) if item]
        return super().to_internal_value(data)


class TextListField(serializers.ListField):
    child = serializers.CharField()

    def to_internal_value(self, data):
        if isinstance(data, str):
            data = [item for item in (part.strip() for part in data.split(',')) if item]
        return super().to_internal_value(data)


class LooseChoiceField(serializers.ChoiceField):
    """Case-insensitive choice; ``euler-maruyama`` matches ``EULER_MARUYAMA``."""

    def to_internal_value(self, data):
        if isinstance(data, str):
            data = data.strip().upper().replace('-', '_')
        return super().to_internal_value(data)


# --- [params] ---
class ParamsSerializer(serializers.Serializer):
    topology = LooseChoiceField(choices=Topology.choices, default=Topology.NONDEGENERATE)
    # 5 rates, or 3 (gamma0, gamma1, gamma2) for the degenerate cascade
    gamma = FloatListField(min_length=3, max_length=5)
    chi = serializers.FloatField(required=False)
    chi1 = serializers.FloatField(required=False)
    chi2 = serializers.FloatField(required=False)
    drive = serializers.FloatField(required=False, help_text="Drive amplitude |E0|.")
    drive_ratio = serializers.FloatField(required=False, help_text="|E0| / |E_thr,2|.")
    drive_epsilon_sq = serializers.FloatField(required=False, help_text="|E0|^2 / |E_thr,1|^2.")
    drive_phase = serializers.FloatField(default=0.0)
    detuning = FloatListField(required=False)

    def validate(self, data):
        topology = data['topology']
        gamma = list(data['gamma'])
        if len(gamma) == 3 and topology == Topology.DEGENERATE:
            gamma = gamma + [gamma[1], gamma[1]]
        if len(gamma) != 5:
            raise serializers.ValidationError({"gamma": "Give five loss rates (three for a degenerate cascade)."})

        if 'chi' in data:
            if 'chi1' in data or 'chi2' in data:
                raise serializers.ValidationError({"chi": "Use either chi or chi1/chi2, not both."})
            chi1 = chi2 = data['chi']
        elif 'chi1' in data and 'chi2' in data:
            chi1, chi2 = data['chi1'], data['chi2']
        else:
            raise serializers.ValidationError({"chi": "Coupling is required (chi, or chi1 and chi2)."})

        detuning = list(data.get('detuning') or [0.0] * 5)
        if len(detuning) == 3 and topology == Topology.DEGENERATE:
            detuning = detuning + [detuning[1], detuning[1]]
        if len(detuning) != 5:
            raise serializers.ValidationError({"detuning": "Give one detuning per mode."})

        given = [key for key in ('drive', 'drive_ratio', 'drive_epsilon_sq') if key in data]
        if len(given) != 1:
            raise serializers.ValidationError(
                {"drive": "Exactly one of drive, drive_ratio, drive_epsilon_sq is required."}
            )

        phase = data['drive_phase']
        unit = complex(math.cos(phase), math.sin(phase))
        try:
            p = validate_params(SystemParams(
                gamma=tuple(gamma),
                chi1=chi1,
                chi2=chi2,
                drive=0.0,
                detuning=tuple(detuning),
                topology=topology,
            ))
            first, second = general_thresholds(p)
        except ParameterError as exc:
            raise serializers.ValidationError({"params": exc.messages})

        key = given[0]
        if key == 'drive':
            amplitude = data['drive']
        elif key == 'drive_ratio':
            amplitude = data['drive_ratio'] * math.sqrt(second)
        else:
            amplitude = math.sqrt(data['drive_epsilon_sq'] * first)
        if not math.isfinite(amplitude) or amplitude < 0:
            raise serializers.ValidationError({key: "Drive does not resolve to a finite amplitude."})

        data['system'] = p.with_drive(amplitude * unit)
        return data


# --- [integrator] ---
class IntegratorSerializer(serializers.Serializer):
    INITIAL_CHOICES = ['vacuum_seed', 'vacuum', 'steady_state']

    scheme = LooseChoiceField(choices=Scheme.choices, default=Scheme.RK4)
    representation = LooseChoiceField(choices=Representation.choices, default=Representation.CLASSICAL)
    dt = serializers.FloatField(min_value=0.0)
    t_end = serializers.FloatField(min_value=0.0)
    record_stride = serializers.IntegerField(min_value=1, default=1)
    seed = serializers.IntegerField(min_value=0, default=0)
    phase_seed = serializers.IntegerField(min_value=0, required=False)
    initial = serializers.ChoiceField(choices=INITIAL_CHOICES, default='vacuum_seed')
    seed_amplitude = serializers.FloatField(min_value=0.0, required=False)
    randomize_phases = serializers.BooleanField(default=True)

    def validate(self, data):
        if data.get('phase_seed') is None:
            data['phase_seed'] = data['seed']
        return data

    def build(self, p, vacuum_seed, divergence_bound, seed=None):
        """IntegratorConfig for ``p``; ``seed`` overrides the noise seed only."""
        data = self.validated_data
        representation = data['representation']
        initial = data['initial']
        if initial == 'vacuum':
            state = Vacuum()
        elif initial == 'steady_state':
            state = steady_state_vector(steady_state(p))
            if representation == Representation.POSITIVE_P:
                state = to_positive_p(state)
            elif representation == Representation.WIGNER:
                state = PhaseSpaceState(Representation.WIGNER, state.amplitudes, state.topology)
        else:
            state = VacuumSeed(
                amplitude=data.get('seed_amplitude'),
                randomize_phases=data['randomize_phases'],
                phase_seed=data['phase_seed'],
                scale=vacuum_seed,
            )
        return IntegratorConfig(
            scheme=data['scheme'],
            representation=representation,
            dt=data['dt'],
            t_end=data['t_end'],
            record_stride=data['record_stride'],
            seed=data['seed'] if seed is None else seed,
            initial_state=state,
            divergence_bound=divergence_bound,
        )


# --- [protocol] ---
class ProtocolSerializer(serializers.Serializer):
    KINDS = ['trace', 'sweep', 'perturb', 'ensemble']

    kind = serializers.ChoiceField(choices=KINDS, default='trace')
    window = serializers.FloatField(min_value=0.0, required=False)
    grid = FloatListField(required=False, min_length=1)
    time = serializers.FloatField(required=False)
    target = LooseChoiceField(choices=KickTarget.choices, default=KickTarget.BOTH)
    magnitude = serializers.FloatField(default=1.0)
    modes = FloatListField(required=False)
    n_traj = serializers.IntegerField(min_value=1, required=False)
    observables = TextListField(required=False)
    window_start = serializers.FloatField(required=False)
    window_end = serializers.FloatField(required=False)

    def validate(self, data):
        kind = data['kind']
        if kind == 'sweep' and not data.get('grid'):
            raise serializers.ValidationError({"grid": "A sweep needs an epsilon^2 grid."})
        if kind == 'perturb' and 'time' not in data:
            raise serializers.ValidationError({"time": "A perturbation needs a kick time."})
        if kind == 'ensemble':
            if 'n_traj' not in data:
                raise serializers.ValidationError({"n_traj": "An ensemble needs n_traj."})
            if not data.get('observables'):
                raise serializers.ValidationError({"observables": "An ensemble needs at least one observable."})
        if ('window_start' in data) != ('window_end' in data):
            raise serializers.ValidationError({"window_start": "Give both window_start and window_end."})
        if 'window_start' in data and not data['window_start'] < data['window_end']:
            raise serializers.ValidationError({"window_end": "window_end must follow window_start."})
        if not math.isfinite(data['magnitude']):
            raise serializers.ValidationError({"magnitude": "Kick magnitude must be finite."})
        return data

    def build(self):
        data = self.validated_data
        kind = data['kind']
        if kind == 'sweep':
            return Sweep(tuple(data['grid']))
        if kind == 'perturb':
            modes = data.get('modes')
            return Perturb(
                time=data['time'],
                target=data['target'],
                magnitude=data['magnitude'],
                modes=tuple(int(m) for m in modes) if modes else None,
            )
        if kind == 'ensemble':
            window = (data['window_start'], data['window_end']) if 'window_start' in data else None
            return EnsembleMoments(data['n_traj'], tuple(data['observables']), window)
        return Trace(window=data.get('window'))


# --- RunManifest ---
class RunManifestSerializer(serializers.ModelSerializer):
    class Meta:
        model = RunManifest
        fields = [
            'run_id', 'phase', 'command', 'scenario_path', 'params', 'seed',
            'tool_version', 'outputs', 'wall_clock', 'step_count', 'extra', 'timestamp',
        ]
        read_only_fields = fields

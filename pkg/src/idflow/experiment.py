"""
Experiment configuration: a single JSON document validated into frozen pydantic models. An empty document reproduces
the dissipative-channel panels (W = 3 lambda, n1-n3 plane at n2 = 0, snapshots at lambda t = 0.02, 0.1, 0.5, 1.0)
"""
import json
import math
from typing import Dict, List, Literal, Optional, Tuple, Union

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator
from pydantic_core import PydanticCustomError

from idflow.constants import DEFAULT_COUPLING, DEFAULT_FIELDS, DEFAULT_RESOLUTION, DEFAULT_SNAPSHOTS, \
    DEFAULT_SPECTRAL_WIDTH, DEFAULT_STEPS, DEFAULT_T_MAX, FIGURE_RADIUS, numerics
from idflow.dynamics import Channel, MasterEquation, RateFunction, constant_rate
from idflow.errors import RangeError, SchemaError
from idflow.qubit import DissipativeModel, dissipative_master_equation, lorentzian_rate

AXES = ('n1', 'n2', 'n3')
RANGE_ERROR_TYPES = {'range', 'greater_than', 'greater_than_equal', 'less_than', 'less_than_equal'}

FieldKind = Literal['idqs', 'idf', 'ridf', 'gamma', 'state_idqs']
OutputFormat = Literal['csv', 'json', 'svg']
Axis = Literal['n1', 'n2', 'n3']
MatrixSpec = List[List[Tuple[float, float]]]


def _range_error(message: str) -> PydanticCustomError:
    return PydanticCustomError('range', message)


class _Frozen(BaseModel):
    model_config = ConfigDict(frozen=True, extra='forbid', populate_by_name=True)


class DissipativeSpec(_Frozen):
    """Lorentzian-bath qubit; lambda and W in 1/time"""
    spectral_width: float = Field(DEFAULT_SPECTRAL_WIDTH, alias='lambda', gt=0)
    coupling: float = Field(DEFAULT_COUPLING, alias='W', ge=0)

    def build(self) -> DissipativeModel:
        """DissipativeModel of this spec"""
        return DissipativeModel(spectral_width=self.spectral_width, coupling=self.coupling)


class TableRate(_Frozen):
    """Rate sampled on ascending times, linearly interpolated"""
    times: Tuple[float, ...]
    values: Tuple[float, ...]

    @model_validator(mode='after')
    def _check_table(self) -> 'TableRate':
        if len(self.times) < 2 or len(self.times) != len(self.values):
            raise PydanticCustomError('table', 'A rate table needs at least 2 times and one value per time')
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise PydanticCustomError('table', 'Rate table times must be strictly ascending')
        return self


class RateSpec(_Frozen):
    """Exactly one of constant, lorentzian or table"""
    constant: Optional[float] = None
    lorentzian: Optional[DissipativeSpec] = None
    table: Optional[TableRate] = None

    @model_validator(mode='after')
    def _one_form(self) -> 'RateSpec':
        if sum(v is not None for v in (self.constant, self.lorentzian, self.table)) != 1:
            raise PydanticCustomError('rate_form', 'A rate needs exactly one of constant, lorentzian, table')
        return self

    def build(self) -> RateFunction:
        """Rate function of this spec; NaN outside a table and at Lorentzian poles"""
        if self.constant is not None:
            return constant_rate(self.constant)
        if self.lorentzian is not None:
            return lorentzian_rate(self.lorentzian.build())
        times, values = np.array(self.table.times), np.array(self.table.values)

        def table(t: float) -> float:
            if t < times[0] or t > times[-1]:
                return math.nan
            return float(np.interp(t, times, values))
        return table


def _matrix(spec: MatrixSpec, what: str) -> np.ndarray:
    arr = np.array([[complex(re, im) for re, im in row] for row in spec], dtype=complex)
    if arr.shape != (2, 2):
        raise PydanticCustomError('shape', f'{what} must be 2x2, got shape {arr.shape}')
    return arr


class ChannelSpec(_Frozen):
    """Jump operator as [re, im] pairs and its rate"""
    jump_operator: MatrixSpec
    rate: RateSpec
    name: str = ''

    @field_validator('jump_operator')
    @classmethod
    def _square(cls, v: MatrixSpec) -> MatrixSpec:
        _matrix(v, 'jump_operator')
        return v


class CustomSpec(_Frozen):
    """Qubit master equation with a constant Hamiltonian; times in the unit of the rates"""
    hamiltonian: MatrixSpec = [[(0.0, 0.0), (0.0, 0.0)], [(0.0, 0.0), (0.0, 0.0)]]
    channels: Tuple[ChannelSpec, ...] = ()

    @field_validator('hamiltonian')
    @classmethod
    def _hermitian(cls, v: MatrixSpec) -> MatrixSpec:
        arr = _matrix(v, 'hamiltonian')
        if np.max(np.abs(arr - arr.conj().T)) > numerics().algebraic_tol:
            raise PydanticCustomError('not_hermitian', 'hamiltonian must be Hermitian')
        return v


class ModelSpec(_Frozen):
    """Exactly one of dissipative or custom; dissipative by default"""
    dissipative: Optional[DissipativeSpec] = None
    custom: Optional[CustomSpec] = None

    @model_validator(mode='before')
    @classmethod
    def _one_model(cls, data):
        if isinstance(data, dict):
            if data.get('dissipative') is not None and data.get('custom') is not None:
                raise PydanticCustomError('model_form', 'Give either dissipative or custom, not both')
            if data.get('dissipative') is None and data.get('custom') is None:
                data = {**data, 'dissipative': {}}
        return data

    @property
    def regime(self) -> Optional[str]:
        """weak/strong of the dissipative model, None for custom models"""
        return self.dissipative.build().regime if self.dissipative is not None else None

    @property
    def time_unit(self) -> float:
        """Physical time of one configuration time unit (1/lambda, or 1 for custom models)"""
        return 1 / self.dissipative.spectral_width if self.dissipative is not None else 1.0


class GridSpec(_Frozen):
    """Plane of initial Bloch vectors sampled by the field frames"""
    plane: Tuple[Axis, Axis] = ('n1', 'n3')
    fixed: Dict[Axis, float] = {}
    ranges: Tuple[Tuple[float, float], Tuple[float, float]] = ((-1.0, 1.0), (-1.0, 1.0))
    resolution: Union[int, Tuple[int, int]] = DEFAULT_RESOLUTION

    @field_validator('plane')
    @classmethod
    def _distinct(cls, v: Tuple[str, str]) -> Tuple[str, str]:
        if v[0] == v[1]:
            raise PydanticCustomError('plane', 'The plane needs two different axes')
        return v

    @field_validator('ranges')
    @classmethod
    def _ascending(cls, v: Tuple[Tuple[float, float], ...]) -> Tuple[Tuple[float, float], ...]:
        for low, high in v:
            if not low < high:
                raise _range_error(f'Range [{low}, {high}] is empty')
        return v

    @field_validator('resolution')
    @classmethod
    def _at_least_two(cls, v: Union[int, Tuple[int, int]]) -> Union[int, Tuple[int, int]]:
        if min(v if isinstance(v, tuple) else (v,)) < 2:
            raise _range_error(f'Resolution must be at least 2 per axis, got {v}')
        return v

    @model_validator(mode='after')
    def _fixed_off_plane(self) -> 'GridSpec':
        if set(self.fixed) & set(self.plane):
            raise PydanticCustomError('plane', 'fixed coordinates must not lie in the plane')
        return self

    @property
    def shape(self) -> Tuple[int, int]:
        """(rows along axis 1, columns along axis 2)"""
        return self.resolution if isinstance(self.resolution, tuple) else (self.resolution, self.resolution)

    @property
    def fixed_axis(self) -> str:
        """The coordinate held constant"""
        return next(a for a in AXES if a not in self.plane)

    @property
    def fixed_value(self) -> float:
        """Value of the fixed coordinate"""
        return self.fixed.get(self.fixed_axis, 0.0)


class TimeSpec(_Frozen):
    """Times in configuration units (lambda t for the dissipative model)"""
    t_max: float = Field(DEFAULT_T_MAX, gt=0)
    steps: int = Field(DEFAULT_STEPS, ge=1)
    snapshots: Tuple[float, ...] = DEFAULT_SNAPSHOTS

    @model_validator(mode='after')
    def _snapshots_in_range(self) -> 'TimeSpec':
        for t in self.snapshots:
            if not 0 <= t <= self.t_max:
                raise _range_error(f'Snapshot time {t} is outside [0, {self.t_max}]')
        return self


class OutputSpec(_Frozen):
    """What to write and where"""
    formats: Tuple[OutputFormat, ...] = ('csv', 'json', 'svg')
    directory: str = '.'
    fields: Tuple[FieldKind, ...] = DEFAULT_FIELDS


class EvolvePoint(_Frozen):
    """Named initial Bloch vector"""
    name: str
    n: Tuple[float, float, float]

    @field_validator('n')
    @classmethod
    def _in_ball(cls, v: Tuple[float, float, float]) -> Tuple[float, float, float]:
        if sum(c * c for c in v) > 1 + numerics().algebraic_tol:
            raise _range_error(f'Bloch vector {v} lies outside the unit ball')
        return v


def _figure_points() -> Tuple[EvolvePoint, ...]:
    r0 = FIGURE_RADIUS
    return (EvolvePoint(name='rho1', n=(0.0, 0.0, r0)),
            EvolvePoint(name='rho2', n=(r0, 0.0, 0.0)),
            EvolvePoint(name='rho3', n=(0.0, 0.0, -r0)),
            EvolvePoint(name='rho4', n=(0.0, 0.0, 0.0)))


class EvolveSpec(_Frozen):
    """Initial states of the evolve subcommand"""
    points: Tuple[EvolvePoint, ...] = Field(default_factory=_figure_points)


class WitnessSpec(_Frozen):
    """Backflow threshold"""
    threshold: float = Field(1e-10, ge=0)


class ExperimentConfig(_Frozen):
    """Validated experiment"""
    model: ModelSpec = Field(default_factory=ModelSpec)
    grid: GridSpec = Field(default_factory=GridSpec)
    times: TimeSpec = Field(default_factory=TimeSpec)
    outputs: OutputSpec = Field(default_factory=OutputSpec)
    evolve: EvolveSpec = Field(default_factory=EvolveSpec)
    witness: WitnessSpec = Field(default_factory=WitnessSpec)

    @model_validator(mode='after')
    def _tables_cover_run(self) -> 'ExperimentConfig':
        if self.model.custom is not None:
            for channel in self.model.custom.channels:
                table = channel.rate.table
                if table is not None and (table.times[0] > 0 or table.times[-1] < self.times.t_max):
                    raise _range_error(f'Rate table of channel {channel.name!r} does not cover [0, '
                                       f'{self.times.t_max}]')
        return self

    def physical_time(self, t: float) -> float:
        """Configuration time to model time"""
        return t * self.model.time_unit

    def t_grid(self) -> np.ndarray:
        """Uniform model-time grid of steps + 1 samples over [0, t_max]"""
        return np.linspace(0.0, self.times.t_max, self.times.steps + 1) * self.model.time_unit

    def dissipative_model(self) -> Optional[DissipativeModel]:
        """DissipativeModel when the experiment uses the closed-form model"""
        return self.model.dissipative.build() if self.model.dissipative is not None else None

    def master_equation(self) -> MasterEquation:
        """Master equation of the configured model"""
        model = self.dissipative_model()
        if model is not None:
            return dissipative_master_equation(model, self.physical_time(self.times.t_max))
        custom = self.model.custom
        channels = [Channel(jump_operator=_matrix(c.jump_operator, 'jump_operator'), rate=c.rate.build(),
                            name=c.name or f'channel{i}') for i, c in enumerate(custom.channels)]
        return MasterEquation.constant(_matrix(custom.hamiltonian, 'hamiltonian'), channels)


def _error_path(loc: Tuple[Union[int, str], ...]) -> str:
    return '.'.join(str(p) for p in loc) or '$'


def parse_config(text: str) -> ExperimentConfig:
    """
    Validates a JSON experiment document
    :param text: UTF-8 JSON text
    :return: ExperimentConfig with defaults filled
    """
    try:
        document = json.loads(text) if text.strip() else {}
    except json.JSONDecodeError as err:
        raise SchemaError(f'Invalid JSON: {err.msg} at line {err.lineno}', '$') from err
    if not isinstance(document, dict):
        raise SchemaError('The configuration must be a JSON object', '$')

    try:
        config = ExperimentConfig.model_validate(document)
    except ValidationError as err:
        first = err.errors()[0]
        path = _error_path(first['loc'])
        error_cls = RangeError if first['type'] in RANGE_ERROR_TYPES else SchemaError
        raise error_cls(first['msg'], path) from err

    logger.debug('Parsed configuration: model {}, grid {}, {} snapshots', config.model.regime or 'custom',
                 config.grid.shape, len(config.times.snapshots))
    return config



"""
Time-local master equations: fixed-step RK4 integration of states and their parameter derivatives, per-channel metric
derivatives, and the decomposition of the intrinsic density flow into per-channel sub-flows
"""
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from idflow.constants import STATUS_OK, STATUS_POLE, STATUS_SINGULAR, STATUS_UNDEFINED, numerics
from idflow.errors import DimMismatchError, NegativeDeterminantError, PoleOnGridError, SingularMetricError, \
    StepTooLargeError, UnsupportedDerivativeError
from idflow.fisher import FisherMetric, SLDSet, StateFamily, idf, idqs, inverse_metric, qfm, ridf, sld_set
from idflow.operators import DensityMatrix, MatrixLike, apply_generator, as_matrix, check_hermitian, commutator, \
    dagger, hermitize, validate_density
from idflow.record_types import FlowRecordType

RateFunction = Callable[[float], float]
HamiltonianFunction = Callable[[float], np.ndarray]


def constant_rate(value: float) -> RateFunction:
    """Rate function that always returns value"""
    def rate(_t: float) -> float:
        return value
    return rate


@dataclass(frozen=True)
class Channel:
    """Dissipation channel: a fixed jump operator and its time-dependent rate"""
    jump_operator: np.ndarray
    rate: RateFunction
    name: str = ''
    pole_times: Tuple[float, ...] = ()


@dataclass(frozen=True)
class MasterEquation:
    """Hamiltonian H(t) plus dissipation channels; defines the generator K(t)"""
    hamiltonian: HamiltonianFunction
    channels: Tuple[Channel, ...] = ()

    @classmethod
    def constant(cls, hamiltonian: MatrixLike, channels: Sequence[Channel] = ()) -> 'MasterEquation':
        """Master equation with a time-independent Hamiltonian"""
        ham = as_matrix(hamiltonian).copy()
        check_hermitian(ham, numerics().algebraic_tol, 'Hamiltonian')

        def fixed(_t: float) -> np.ndarray:
            return ham
        return cls(hamiltonian=fixed, channels=tuple(channels))

    @property
    def dim(self) -> int:
        """Hilbert space dimension"""
        return self.hamiltonian_at(0.0).shape[0]

    def hamiltonian_at(self, t: float) -> np.ndarray:
        """H(t), checked to be Hermitian"""
        ham = as_matrix(self.hamiltonian(t))
        check_hermitian(ham, numerics().algebraic_tol, f'Hamiltonian at t={t}')
        return ham

    def rates(self, t: float) -> List[float]:
        """gamma_i(t) for every channel, as given (poles may be non-finite)"""
        return [float(channel.rate(t)) for channel in self.channels]

    def pole_times(self) -> List[float]:
        """Declared pole times of every channel, ascending"""
        return sorted({p for channel in self.channels for p in channel.pole_times})


@dataclass(frozen=True)
class Trajectory:
    """States on an ascending time grid"""
    times: np.ndarray
    states: Tuple[DensityMatrix, ...]


@dataclass(frozen=True)
class FamilyTrajectory:
    """States and their parameter derivatives on an ascending time grid"""
    times: np.ndarray
    states: Tuple[DensityMatrix, ...]
    derivatives: np.ndarray  # shape (times, parameters, dim, dim)


@dataclass(frozen=True)
class FlowRecord:
    """Density, flow and per-channel sub-flows at one time. Fields are None where undefined"""
    t: float
    idqs: Optional[float]
    idf: Optional[float]
    ridf: Optional[float]
    sub_idf: Tuple[Optional[float], ...]
    gamma: Tuple[Optional[float], ...]
    status: str = STATUS_OK

    @property
    def defined(self) -> bool:
        """True when idqs, idf and ridf were all computed"""
        return self.status == STATUS_OK

    def to_dict(self) -> FlowRecordType:
        """JSON-ready representation"""
        def finite(value: Optional[float]) -> Optional[float]:
            return value if value is not None and math.isfinite(value) else None
        return {'t': self.t,
                'idqs': finite(self.idqs),
                'idf': finite(self.idf),
                'ridf': finite(self.ridf),
                'sub_idf': [finite(v) for v in self.sub_idf],
                'gamma': [finite(v) for v in self.gamma],
                'status': self.status}

    @classmethod
    def from_dict(cls, data: FlowRecordType) -> 'FlowRecord':
        """Inverse of to_dict"""
        return cls(t=data['t'], idqs=data['idqs'], idf=data['idf'], ridf=data['ridf'],
                   sub_idf=tuple(data['sub_idf']), gamma=tuple(data['gamma']), status=data['status'])


def _time_grid(t_grid: Sequence[float]) -> np.ndarray:
    grid = np.asarray(t_grid, dtype=float)
    if grid.ndim != 1 or grid.size < 1:
        raise ValueError('Time grid needs at least one time')
    if np.any(np.diff(grid) <= 0):
        raise ValueError('Time grid must be strictly ascending')
    return grid


def _checked_rates(me: MasterEquation, t: float) -> List[float]:
    rates = me.rates(t)
    for index, rate in enumerate(rates):
        if not math.isfinite(rate):
            raise PoleOnGridError(f'Rate of channel {index} is {rate} at t={t}')
    return rates


def _derivative(me: MasterEquation, t: float, stack: np.ndarray) -> np.ndarray:
    return apply_generator(me, t, stack, rates=_checked_rates(me, t))


def _rk4_step(me: MasterEquation, t: float, h: float, stack: np.ndarray) -> np.ndarray:
    k1 = _derivative(me, t, stack)
    k2 = _derivative(me, t + h / 2, stack + h / 2 * k1)
    k3 = _derivative(me, t + h / 2, stack + h / 2 * k2)
    k4 = _derivative(me, t + h, stack + h * k3)
    return stack + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def integrate_operators(me: MasterEquation, operators: Sequence[MatrixLike], t_grid: Sequence[float]) -> np.ndarray:
    """
    Propagates a stack of operators with the (linear) generator using classical RK4 on the given grid. Every step is
    compared against two half steps; the half-step result is kept and the difference must stay below the half-step
    tolerance. Operators are Hermitized after each step
    :param me: master equation
    :param operators: Hermitian operators at t_grid[0]
    :param t_grid: strictly ascending times
    :return: array of shape (len(t_grid), len(operators), dim, dim)
    """
    grid = _time_grid(t_grid)
    stack = np.array([as_matrix(op) for op in operators], dtype=complex)
    if stack.shape[1:] != (me.dim, me.dim):
        raise DimMismatchError(f'Operators of shape {stack.shape[1:]} do not match dimension {me.dim}')
    tol = numerics().half_step_tol

    out = np.empty((grid.size,) + stack.shape, dtype=complex)
    out[0] = stack
    _checked_rates(me, grid[0])
    for index in range(1, grid.size):
        t, h = grid[index - 1], grid[index] - grid[index - 1]
        _checked_rates(me, grid[index])
        full = _rk4_step(me, t, h, stack)
        half = _rk4_step(me, t + h / 2, h / 2, _rk4_step(me, t, h / 2, stack))
        error = float(np.max(np.abs(full - half)))
        if error > tol:
            raise StepTooLargeError(f'Half-step error {error:.3e} exceeds {tol:.1e} on [{t}, {grid[index]}]')
        stack = hermitize_stack(half)
        out[index] = stack
    logger.debug('Propagated {} operators over {} steps', len(operators), grid.size - 1)
    return out


def hermitize_stack(stack: np.ndarray) -> np.ndarray:
    """(M + M^dagger) / 2 for every operator of a stack"""
    return (stack + np.conj(np.swapaxes(stack, -1, -2))) / 2


def _trajectory_state(matrix: np.ndarray) -> DensityMatrix:
    cfg = numerics()
    return validate_density(matrix, eig_tol=cfg.trajectory_eig_tol, trace_tol=cfg.trajectory_trace_tol)


def integrate(me: MasterEquation, rho0: MatrixLike, t_grid: Sequence[float]) -> Trajectory:
    """
    Integrates d rho/dt = K(t) rho from rho0 at t_grid[0]
    :param me: master equation
    :param rho0: initial state
    :param t_grid: strictly ascending times
    :return: Trajectory
    """
    grid = _time_grid(t_grid)
    start = validate_density(rho0)
    logger.info('Integrating a dimension {} state over t in [{}, {}]', start.dim, grid[0], grid[-1])
    propagated = integrate_operators(me, [start.matrix], grid)
    return Trajectory(times=grid, states=tuple(_trajectory_state(p[0]) for p in propagated))


def integrate_family(me: MasterEquation, family: StateFamily, x0: Sequence[float], t_grid: Sequence[float],
                     step: Optional[float] = None, richardson: bool = False) -> FamilyTrajectory:
    """
    Co-integrates rho(x0; t) with every d_mu rho(x0; t). The generator does not depend on the parameters, so each
    derivative obeys the same linear equation as the state
    :param me: master equation
    :param family: initial state family
    :param x0: parameter point
    :param t_grid: strictly ascending times
    :param step: finite-difference step for families without analytic derivatives
    :param richardson: Richardson extrapolation of the initial derivatives
    :return: FamilyTrajectory
    """
    grid = _time_grid(t_grid)
    start = family.state(x0)
    derivatives = family.derivatives(x0, step, richardson)
    propagated = integrate_operators(me, [start.matrix] + list(derivatives), grid)
    return FamilyTrajectory(times=grid,
                            states=tuple(_trajectory_state(p[0]) for p in propagated),
                            derivatives=propagated[:, 1:])


def channel_metric_derivative(jump_operator: MatrixLike, rho: MatrixLike, slds: SLDSet) -> np.ndarray:
    """
    Contribution of one channel (per unit rate) to dg/dt:
    -1/8 Re Tr{([A, L_nu]^dagger [A, L_mu] + [A, L_mu]^dagger [A, L_nu]) rho}
    The matrix is negative semidefinite
    :param jump_operator: A
    :param rho: density matrix
    :param slds: SLDs of rho
    :return: symmetric d x d matrix
    """
    rho_m = as_matrix(rho)
    jump = as_matrix(jump_operator)
    comms = [commutator(jump, op) for op in slds.operators]
    size = len(comms)
    out = np.zeros((size, size))
    for mu in range(size):
        for nu in range(mu, size):
            overlap = dagger(comms[nu]) @ comms[mu]
            value = np.trace((overlap + dagger(overlap)) @ rho_m).real
            out[mu, nu] = out[nu, mu] = -value / 8
    return out


def sub_idf(gamma: float, channel_deriv: np.ndarray, metric: FisherMetric, idqs_value: float) -> float:
    """
    Sub-flow of one channel, (gamma / 2) tr[g^-1 (dg/dt)_i] D
    :param gamma: channel rate at this time
    :param channel_deriv: channel_metric_derivative of the channel
    :param metric: Fisher metric
    :param idqs_value: IDQS at this point
    :return: sub-IDF; its sign is opposite to gamma
    """
    if gamma == 0:
        return 0.0
    inverse = inverse_metric(metric)
    return float(gamma / 2 * np.trace(inverse @ channel_deriv) * idqs_value)


def flow_record(me: MasterEquation, t: float, rho: DensityMatrix, derivatives: Sequence[np.ndarray],
                point: Optional[Sequence[float]] = None) -> FlowRecord:
    """
    Density, flow and per-channel sub-flows of the family at one time
    :param me: master equation
    :param t: time
    :param rho: rho(x0; t)
    :param derivatives: d_mu rho(x0; t)
    :param point: parameter point recorded on the metric
    :return: FlowRecord; status pole or singular when the rate or metric does not allow the flow
    """
    rates = me.rates(t)
    gammas: Tuple[Optional[float], ...] = tuple(r if math.isfinite(r) else None for r in rates)
    empty = tuple(None for _ in rates)
    if any(g is None for g in gammas):
        return FlowRecord(t=t, idqs=None, idf=None, ridf=None, sub_idf=empty, gamma=gammas, status=STATUS_POLE)

    slds = sld_set(rho, derivatives)
    metric = qfm(rho, slds, point)
    density = idqs(metric)
    stack = np.array([rho.matrix] + list(derivatives))
    flows = apply_generator(me, t, stack, rates=rates)
    try:
        relative = ridf(rho, flows[0], slds, list(flows[1:]), metric)
        subs = tuple(sub_idf(rate, channel_metric_derivative(channel.jump_operator, rho, slds), metric, density)
                     for channel, rate in zip(me.channels, rates))
    except SingularMetricError as err:
        logger.debug('Singular metric at t={}: {}', t, err)
        return FlowRecord(t=t, idqs=density, idf=None, ridf=None, sub_idf=empty, gamma=gammas,
                          status=STATUS_SINGULAR)

    total = idf(relative, density)
    mismatch = abs(total - sum(subs))
    if mismatch > numerics().decomposition_tol * max(1.0, abs(total)):
        logger.warning('IDF {} differs from the sum of sub-IDFs by {} at t={}', total, mismatch, t)
    return FlowRecord(t=t, idqs=density, idf=total, ridf=relative, sub_idf=subs, gamma=gammas)


def flow_series(me: MasterEquation, family: StateFamily, x0: Sequence[float], t_grid: Sequence[float],
                step: Optional[float] = None, richardson: bool = False) -> List[FlowRecord]:
    """
    Co-integrates the family at x0 and emits a FlowRecord at every grid time. After the first record whose metric
    is singular or whose derivatives leave the support of the state, every later record is flagged undefined
    :param me: master equation
    :param family: initial state family
    :param x0: parameter point
    :param t_grid: strictly ascending times, free of rate poles
    :param step: finite-difference step for families without analytic derivatives
    :param richardson: Richardson extrapolation of the initial derivatives
    :return: list of FlowRecord
    """
    trajectory = integrate_family(me, family, x0, t_grid, step, richardson)
    records: List[FlowRecord] = []
    failed = False
    for index, t in enumerate(trajectory.times):
        t = float(t)
        if failed:
            rates = me.rates(t)
            records.append(FlowRecord(t=t, idqs=None, idf=None, ridf=None, sub_idf=tuple(None for _ in rates),
                                      gamma=tuple(r if math.isfinite(r) else None for r in rates),
                                      status=STATUS_UNDEFINED))
            continue
        try:
            record = flow_record(me, t, trajectory.states[index], list(trajectory.derivatives[index]), x0)
        except (UnsupportedDerivativeError, NegativeDeterminantError) as err:
            logger.warning('Rank loss at t={}: {}', t, err)
            rates = me.rates(t)
            record = FlowRecord(t=t, idqs=None, idf=None, ridf=None, sub_idf=tuple(None for _ in rates),
                                gamma=tuple(r if math.isfinite(r) else None for r in rates), status=STATUS_UNDEFINED)
        if record.status in (STATUS_SINGULAR, STATUS_UNDEFINED):
            failed = True
        records.append(record)
    logger.info('Flow series at {}: {} records, {} defined', list(x0), len(records),
                sum(r.defined for r in records))
    return records


def unitary_family(family: StateFamily, hamiltonian: MatrixLike, t: float) -> StateFamily:
    """
    The family evolved by the parameter-independent unitary exp(-i H t); derivatives transform the same way
    :param family: initial family
    :param hamiltonian: constant Hamiltonian
    :param t: evolution time
    :return: evolved StateFamily
    """
    ham = as_matrix(hamiltonian)
    check_hermitian(ham, numerics().algebraic_tol, 'Hamiltonian')
    values, vectors = np.linalg.eigh(hermitize(ham))
    unitary = (vectors * np.exp(-1j * values * t)) @ dagger(vectors)

    def evaluator(x: np.ndarray) -> np.ndarray:
        return hermitize(unitary @ family.state(x).matrix @ dagger(unitary))

    def derivative(x: np.ndarray, mu: int) -> np.ndarray:
        return hermitize(unitary @ family.derivatives(x)[mu] @ dagger(unitary))

    return StateFamily(dim_param=family.dim_param, evaluator=evaluator, derivative=derivative,
                       name=f'{family.name}@U({t})')



"""
Scalar fields over a plane of initial Bloch vectors. Frames of the dissipative model come from the closed forms;
frames of custom models propagate the affine Bloch basis once and run the metric pipeline at every cell. Failures
never abort a frame: they become mask reasons
"""
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple

import numpy as np
from loguru import logger

from idflow.constants import FIELD_KINDS, GAMMA, IDF, IDQS, MASK_BOUNDARY, MASK_NONE, MASK_POLE, MASK_UNDEFINED, \
    RIDF, SIGNED_FIELDS, STATE_IDQS, STATUS_OK, STATUS_POLE, numerics
from idflow.dynamics import FlowRecord, MasterEquation, flow_record, integrate_operators
from idflow.errors import IdflowError, PoleError, PureBoundaryError
from idflow.experiment import AXES, ExperimentConfig
from idflow.operators import IDENTITY_2, PAULIS, bloch_components, validate_density
from idflow.qubit import DissipativeModel, bloch_idqs, bloch_motion, dissip_idf, dissip_idqs, dissip_ridf, \
    gamma_rate, h_characteristic, state_space_idqs
from idflow.record_types import FieldFrameType

Cell = Tuple[float, str]


@dataclass(frozen=True)
class FieldFrame:
    """
    One field at one time. values[i, j] belongs to (axis1[i], axis2[j]); masked cells hold NaN and a reason code in
    mask
    """
    field: str
    time: float
    axis_labels: Tuple[str, str]
    axis1: np.ndarray
    axis2: np.ndarray
    values: np.ndarray
    mask: np.ndarray

    @property
    def signed(self) -> bool:
        """True for fields rendered on a diverging palette"""
        return self.field in SIGNED_FIELDS

    @property
    def shape(self) -> Tuple[int, int]:
        """(len(axis1), len(axis2))"""
        return self.values.shape

    def unmasked(self) -> np.ndarray:
        """Values of the unmasked cells, row-major"""
        return self.values[self.mask == MASK_NONE]

    def to_dict(self) -> FieldFrameType:
        """JSON-ready representation; masked values become None"""
        return {'field': self.field,
                'time': self.time,
                'axis_labels': list(self.axis_labels),
                'axis1': [float(v) for v in self.axis1],
                'axis2': [float(v) for v in self.axis2],
                'values': [[None if reason else float(v) for v, reason in zip(row, reasons)]
                           for row, reasons in zip(self.values, self.mask)],
                'mask': [[str(r) for r in reasons] for reasons in self.mask]}

    @classmethod
    def from_dict(cls, data: FieldFrameType) -> 'FieldFrame':
        """Inverse of to_dict"""
        values = np.array([[math.nan if v is None else v for v in row] for row in data['values']], dtype=float)
        return cls(field=data['field'], time=data['time'], axis_labels=tuple(data['axis_labels']),
                   axis1=np.array(data['axis1'], dtype=float), axis2=np.array(data['axis2'], dtype=float),
                   values=values, mask=np.array(data['mask'], dtype=object))


def grid_axis(low: float, high: float, size: int) -> np.ndarray:
    """Uniform axis; exactly antisymmetric when the range is symmetric about zero"""
    axis = np.linspace(low, high, size)
    if low == -high:
        axis = (axis - axis[::-1]) / 2
    return axis


def initial_vector(config: ExperimentConfig, a: float, b: float) -> np.ndarray:
    """Bloch vector of the grid point (a, b) of the configured plane"""
    coords = {config.grid.plane[0]: a, config.grid.plane[1]: b, config.grid.fixed_axis: config.grid.fixed_value}
    return np.array([coords[axis] for axis in AXES])


def _analytic_cell(model: DissipativeModel, kind: str, t: float) -> Callable[[np.ndarray], Cell]:
    cfg = numerics()
    evaluators = {IDQS: dissip_idqs, IDF: dissip_idf, RIDF: dissip_ridf, STATE_IDQS: state_space_idqs}
    pole = abs(h_characteristic(model, t)) < cfg.pole_tol

    def cell(n0: np.ndarray) -> Cell:
        if pole:
            return math.nan, MASK_POLE
        if bloch_motion(n0, model, t).norm >= cfg.mask_radius:
            return math.nan, MASK_BOUNDARY
        try:
            if kind == GAMMA:
                return gamma_rate(model, t), MASK_NONE
            return evaluators[kind](n0, model, t), MASK_NONE
        except PoleError:
            return math.nan, MASK_POLE
        except PureBoundaryError:
            return math.nan, MASK_BOUNDARY
    return cell


def _record_value(record: FlowRecord, kind: str) -> Optional[float]:
    if kind == GAMMA:
        return record.gamma[0] if record.gamma else 0.0
    return {IDQS: record.idqs, IDF: record.idf, RIDF: record.ridf}[kind]


def propagated_basis(me: MasterEquation, t: float, steps: int) -> np.ndarray:
    """
    Images of the affine Bloch basis I/2, sigma_mu/2 under the dynamics up to t, so that
    rho(n0; t) = Phi(I/2) + sum_mu n0^mu Phi(sigma_mu/2) and d_mu rho(n0; t) = Phi(sigma_mu/2)
    :param me: qubit master equation
    :param t: model time
    :param steps: RK4 steps from 0 to t
    :return: array of shape (4, 2, 2)
    """
    basis = [IDENTITY_2 / 2] + [p / 2 for p in PAULIS]
    if t == 0:
        return np.array(basis)
    return integrate_operators(me, basis, np.linspace(0.0, t, steps + 1))[-1]


def _pipeline_cell(me: MasterEquation, kind: str, t: float, basis: np.ndarray) -> Callable[[np.ndarray], Cell]:
    cfg = numerics()

    def cell(n0: np.ndarray) -> Cell:
        matrix = basis[0] + sum(c * b for c, b in zip(n0, basis[1:]))
        if np.linalg.norm(bloch_components(matrix)) >= cfg.mask_radius:
            return math.nan, MASK_BOUNDARY
        try:
            rho = validate_density(matrix, eig_tol=cfg.trajectory_eig_tol, trace_tol=cfg.trajectory_trace_tol)
            if kind == STATE_IDQS:
                return bloch_idqs(bloch_components(rho)), MASK_NONE
            record = flow_record(me, t, rho, list(basis[1:]), n0)
        except IdflowError as err:
            logger.debug('Cell {} undefined: {}', list(n0), err)
            return math.nan, MASK_UNDEFINED
        if record.status == STATUS_POLE:
            return math.nan, MASK_POLE
        value = _record_value(record, kind)
        if value is None or (record.status != STATUS_OK and kind != GAMMA):
            return math.nan, MASK_UNDEFINED
        return value, MASK_NONE
    return cell


def sample_field(config: ExperimentConfig, field_kind: str, t: float, threads: int = 1) -> FieldFrame:
    """
    Evaluates one field at every grid point of the configured plane
    :param config: ExperimentConfig
    :param field_kind: idqs, idf, ridf, gamma or state_idqs
    :param t: time in configuration units
    :param threads: worker threads; rows are assembled in order whatever the schedule
    :return: FieldFrame
    """
    if field_kind not in FIELD_KINDS:
        raise ValueError(f'Unknown field {field_kind!r}, expected one of {FIELD_KINDS}')
    grid = config.grid
    rows, cols = grid.shape
    axis1 = grid_axis(*grid.ranges[0], rows)
    axis2 = grid_axis(*grid.ranges[1], cols)
    model_t = config.physical_time(t)

    model = config.dissipative_model()
    if model is not None:
        cell = _analytic_cell(model, field_kind, model_t)
    else:
        me = config.master_equation()
        steps = max(1, round(config.times.steps * t / config.times.t_max))
        cell = _pipeline_cell(me, field_kind, model_t, propagated_basis(me, model_t, steps))
    mask_radius = numerics().mask_radius

    def row(i: int) -> List[Cell]:
        ret = []
        for b in axis2:
            n0 = initial_vector(config, axis1[i], b)
            ret.append((math.nan, MASK_BOUNDARY) if np.linalg.norm(n0) >= mask_radius else cell(n0))
        return ret

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        cells = list(pool.map(row, range(rows)))

    values = np.array([[v for v, _ in r] for r in cells], dtype=float)
    mask = np.array([[m for _, m in r] for r in cells], dtype=object)
    logger.info('Sampled {} at t={} on {}x{}: {} cells masked', field_kind, t, rows, cols,
                int(np.sum(mask != MASK_NONE)))
    return FieldFrame(field=field_kind, time=t, axis_labels=grid.plane, axis1=axis1, axis2=axis2, values=values,
                      mask=mask)

"""
Closed-form qubit models on the Bloch ball: the Bloch parameterization and its density of states, and the dissipative
channel of a qubit coupled to a Lorentzian bath with vanishing detuning (characteristic function h(t), rate
gamma(t) = -2 h'/h, equations of motion, IDQS, IDF, RIDF and the state-space split of the RIDF)
"""
import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple, Union

import numpy as np
from loguru import logger

from idflow.constants import DEFAULT_COUPLING, DEFAULT_SPECTRAL_WIDTH, DEFAULT_T_MAX, STATUS_POLE, STATUS_UNDEFINED, \
    numerics
from idflow.dynamics import Channel, FlowRecord, MasterEquation, RateFunction
from idflow.errors import OutsideBallError, PoleError, PureBoundaryError
from idflow.fisher import StateFamily
from idflow.operators import IDENTITY_2, PAULIS, SIGMA_MINUS, DensityMatrix, validate_density

WEAK = 'weak'
STRONG = 'strong'


@dataclass(frozen=True)
class BlochVector:
    """Real 3-vector n with |n|^2 <= 1"""
    n1: float
    n2: float
    n3: float

    def __post_init__(self):
        if not all(math.isfinite(c) for c in self.components):
            raise ValueError(f'Bloch vector {self.components} is not finite')
        if self.norm_squared > 1 + numerics().algebraic_tol:
            raise OutsideBallError(f'|n|^2 = {self.norm_squared:.15g} exceeds 1')

    @classmethod
    def of(cls, n: 'BlochLike') -> 'BlochVector':
        """Coerces a 3-sequence or a BlochVector"""
        if isinstance(n, BlochVector):
            return n
        values = [float(c) for c in n]
        if len(values) != 3:
            raise ValueError(f'A Bloch vector has 3 components, got {len(values)}')
        return cls(*values)

    @property
    def components(self) -> Tuple[float, float, float]:
        """(n1, n2, n3)"""
        return self.n1, self.n2, self.n3

    @property
    def norm_squared(self) -> float:
        """|n|^2"""
        return self.n1 ** 2 + self.n2 ** 2 + self.n3 ** 2

    @property
    def norm(self) -> float:
        """|n|"""
        return math.sqrt(self.norm_squared)


BlochLike = Union[BlochVector, Sequence[float]]


@dataclass(frozen=True)
class DissipativeModel:
    """Lorentzian bath with spectral width lambda and coupling W, both in 1/time"""
    spectral_width: float = DEFAULT_SPECTRAL_WIDTH
    coupling: float = DEFAULT_COUPLING

    def __post_init__(self):
        if not self.spectral_width > 0:
            raise ValueError(f'Spectral width must be positive, got {self.spectral_width}')
        if not self.coupling >= 0:
            raise ValueError(f'Coupling must be non-negative, got {self.coupling}')

    @property
    def regime(self) -> str:
        """weak when W < lambda / 2, strong otherwise"""
        return WEAK if self.coupling < self.spectral_width / 2 else STRONG

    @property
    def d(self) -> float:
        """sqrt(|lambda^2 - 4 W^2|)"""
        return math.sqrt(abs(self.spectral_width ** 2 - 4 * self.coupling ** 2))

    @property
    def degenerate(self) -> bool:
        """True when d is numerically zero (W = lambda / 2)"""
        return self.d < numerics().degenerate_tol * self.spectral_width


def h_characteristic(model: DissipativeModel, t: float) -> float:
    """
    Characteristic function of the amplitude damping
    weak:   e^{-lambda t/2} [cosh(dt/2) + (lambda/d) sinh(dt/2)]
    strong: e^{-lambda t/2} [cos(dt/2) + (lambda/d) sin(dt/2)]
    and the limit e^{-lambda t/2} (1 + lambda t/2) when d -> 0
    :param model: DissipativeModel
    :param t: time, t >= 0
    :return: h(t), with h(0) = 1
    """
    lam, d = model.spectral_width, model.d
    decay = math.exp(-lam * t / 2)
    if model.degenerate:
        return decay * (1 + lam * t / 2)
    if model.regime == WEAK:
        return decay * (math.cosh(d * t / 2) + lam / d * math.sinh(d * t / 2))
    return decay * (math.cos(d * t / 2) + lam / d * math.sin(d * t / 2))


def h_derivative(model: DissipativeModel, t: float) -> float:
    """
    dh/dt in closed form: -(2W^2/d) e^{-lambda t/2} sinh(dt/2) or sin(dt/2), and -(lambda^2 t/4) e^{-lambda t/2}
    at d = 0
    """
    lam, d, coupling = model.spectral_width, model.d, model.coupling
    decay = math.exp(-lam * t / 2)
    if model.degenerate:
        return -lam ** 2 * t / 4 * decay
    if model.regime == WEAK:
        return -2 * coupling ** 2 / d * decay * math.sinh(d * t / 2)
    return -2 * coupling ** 2 / d * decay * math.sin(d * t / 2)


def gamma_rate(model: DissipativeModel, t: float) -> float:
    """
    Time-dependent decay rate -2 h'(t) / h(t)
    :param model: DissipativeModel
    :param t: time
    :return: gamma(t); gamma(0) = 0
    """
    h = h_characteristic(model, t)
    if abs(h) < numerics().pole_tol:
        raise PoleError(f'h({t}) = {h:.3e}; the rate has a pole there')
    return -2 * h_derivative(model, t) / h


def pole_times(model: DissipativeModel, t_max: float) -> List[float]:
    """
    Zeros of h in (0, t_max]: (2/d)(k pi - arctan(d/lambda)), k = 1, 2, ... in the strong regime; none otherwise
    :param model: DissipativeModel
    :param t_max: horizon
    :return: ascending times
    """
    if model.regime == WEAK or model.degenerate:
        return []
    d, lam = model.d, model.spectral_width
    ret = []
    k = 1
    while True:
        t = 2 / d * (k * math.pi - math.atan(d / lam))
        if t > t_max:
            return ret
        ret.append(t)
        k += 1


def rate_sign_change_times(model: DissipativeModel, t_max: float) -> List[float]:
    """Zeros of h' in (0, t_max] (2 pi k / d in the strong regime), where gamma changes sign without a pole"""
    if model.regime == WEAK or model.degenerate:
        return []
    period = 2 * math.pi / model.d
    return [k * period for k in range(1, int(t_max / period) + 1)]


def bloch_state(n: BlochLike) -> DensityMatrix:
    """
    1/2 (I + n . sigma)
    :param n: Bloch vector in the unit ball
    :return: DensityMatrix with eigenvalues (1 +- |n|)/2
    """
    vector = BlochVector.of(n)
    matrix = IDENTITY_2 / 2 + sum(c * p for c, p in zip(vector.components, PAULIS)) / 2
    return validate_density(matrix)


def bloch_family() -> StateFamily:
    """Cartesian Bloch family x0 = n with analytic derivatives sigma_mu / 2"""
    def evaluator(x: np.ndarray) -> np.ndarray:
        return bloch_state(x).matrix

    def derivative(_x: np.ndarray, mu: int) -> np.ndarray:
        return PAULIS[mu] / 2

    return StateFamily(dim_param=3, evaluator=evaluator, derivative=derivative, name='bloch')


def spherical_point(r: float, theta: float, phi: float) -> np.ndarray:
    """Cartesian n of spherical coordinates (r, theta, phi)"""
    return r * np.array([math.sin(theta) * math.cos(phi), math.sin(theta) * math.sin(phi), math.cos(theta)])


def spherical_family() -> StateFamily:
    """Bloch family in spherical coordinates x0 = (r, theta, phi), analytic derivatives"""
    def evaluator(x: np.ndarray) -> np.ndarray:
        return bloch_state(spherical_point(*x)).matrix

    def derivative(x: np.ndarray, mu: int) -> np.ndarray:
        r, theta, phi = x
        st, ct, sp, cp = math.sin(theta), math.cos(theta), math.sin(phi), math.cos(phi)
        tangent = ([st * cp, st * sp, ct],
                   [r * ct * cp, r * ct * sp, -r * st],
                   [-r * st * sp, r * st * cp, 0.0])[mu]
        return sum(c * p for c, p in zip(tangent, PAULIS)) / 2

    return StateFamily(dim_param=3, evaluator=evaluator, derivative=derivative, name='spherical')


def depolarized_family(family: StateFamily, p: float) -> StateFamily:
    """
    The family after the depolarizing map rho -> (1 - p) rho + p I/d; on the Bloch ball n -> (1 - p) n
    :param family: family of any dimension
    :param p: depolarizing probability in [0, 1]
    :return: StateFamily
    """
    if not 0 <= p <= 1:
        raise ValueError(f'Depolarizing probability must be in [0, 1], got {p}')

    def evaluator(x: np.ndarray) -> np.ndarray:
        rho = family.state(x)
        return (1 - p) * rho.matrix + p * np.eye(rho.dim) / rho.dim

    def derivative(x: np.ndarray, mu: int) -> np.ndarray:
        return (1 - p) * family.derivatives(x)[mu]

    return StateFamily(dim_param=family.dim_param, evaluator=evaluator, derivative=derivative,
                       name=f'{family.name}@depolarized({p})')


def bloch_idqs(n: BlochLike) -> float:
    """
    IDQS of the Cartesian Bloch family, 1 / (8 sqrt(1 - |n|^2)); depends on the radius only
    :param n: Bloch vector
    :return: density, minimum 1/8 at the center
    """
    vector = BlochVector.of(n)
    if vector.norm >= 1 - numerics().boundary_tol:
        raise PureBoundaryError(f'|n| = {vector.norm:.12g} is on the pure-state boundary')
    return 1 / (8 * math.sqrt(1 - vector.norm_squared))


def bloch_motion(n0: BlochLike, model: DissipativeModel, t: float) -> BlochVector:
    """
    Solution of the dissipative model: n^{1,2}(t) = h n0^{1,2}, n^3(t) = h^2 (1 + n0^3) - 1
    :param n0: initial Bloch vector
    :param model: DissipativeModel
    :param t: time
    :return: BlochVector at t
    """
    start = BlochVector.of(n0)
    h = h_characteristic(model, t)
    n3 = h ** 2 * (1 + start.n3) - 1
    return BlochVector(h * start.n1, h * start.n2, n3)


def _shrink(start: BlochVector, h: float) -> float:
    # (1 - |n(t)|^2) / h^2, free of the cancellation near h = 0
    return (1 + start.n3) ** 2 * (1 - h ** 2) + 1 - start.norm_squared


def _radial_ratio(start: BlochVector, h: float) -> float:
    # (1 + n^3)^2 / (1 - |n|^2) at time t; 0 on the stationary ground state
    if abs(1 + start.n3) <= numerics().boundary_tol and start.n1 == 0 and start.n2 == 0:
        return 0.0
    shrink = _shrink(start, h)
    if shrink <= 0:
        raise PureBoundaryError(f'State {start.components} stays on the pure-state boundary')
    return h ** 2 * (1 + start.n3) ** 2 / shrink


def dissip_idqs(n0: BlochLike, model: DissipativeModel, t: float) -> float:
    """
    IDQS of the evolved Bloch family, h^4 / (8 sqrt(1 - |n(t)|^2)). Vanishes at the zeros of h, where the whole ball
    contracts to the ground state
    :param n0: initial Bloch vector
    :param model: DissipativeModel
    :param t: time
    :return: density
    """
    start = BlochVector.of(n0)
    shrink = _shrink(start, h_characteristic(model, t))
    if shrink <= numerics().boundary_tol:
        raise PureBoundaryError(f'State evolved from {start.components} is on the pure-state boundary at t={t}')
    return abs(h_characteristic(model, t)) ** 3 / (8 * math.sqrt(shrink))


def dissip_ridf(n0: BlochLike, model: DissipativeModel, t: float) -> float:
    """
    RIDF of the dissipative model, -(gamma/2) [3 + (1 + n^3)^2 / (1 - |n|^2)] at n = n(t)
    :param n0: initial Bloch vector
    :param model: DissipativeModel
    :param t: time
    :return: RIDF
    """
    start = BlochVector.of(n0)
    gamma = gamma_rate(model, t)
    return -gamma / 2 * (3 + _radial_ratio(start, h_characteristic(model, t)))


def dissip_idf(n0: BlochLike, model: DissipativeModel, t: float) -> float:
    """IDF of the dissipative model, dissip_ridf * dissip_idqs"""
    return dissip_ridf(n0, model, t) * dissip_idqs(n0, model, t)


def state_space_split(n0: BlochLike, model: DissipativeModel, t: float) -> Tuple[float, float]:
    """
    Splits the RIDF into the half log-derivative of det g along the orbit n(t) and the log-derivative of the Jacobian
    det dn/dn0 = h^4
    :param n0: initial Bloch vector
    :param model: DissipativeModel
    :param t: time
    :return: (orbit_term, jacobian_term); their sum is dissip_ridf and jacobian_term = -2 gamma
    """
    start = BlochVector.of(n0)
    h = h_characteristic(model, t)
    gamma = gamma_rate(model, t)
    orbit = -gamma / 2 * (_radial_ratio(start, h) - 1)
    jacobian = 4 * h_derivative(model, t) / h
    return orbit, jacobian


def state_space_idqs(n0: BlochLike, model: DissipativeModel, t: float) -> float:
    """
    Density of the evolved state space at the image point, bloch_idqs(n(t)) = 1 / (8 |h| sqrt(...))
    :param n0: initial Bloch vector
    :param model: DissipativeModel
    :param t: time
    :return: density at n(t)
    """
    start = BlochVector.of(n0)
    h = h_characteristic(model, t)
    if abs(h) < numerics().pole_tol:
        raise PoleError(f'h({t}) = {h:.3e}; the state space is a single point')
    shrink = _shrink(start, h)
    if shrink <= numerics().boundary_tol:
        raise PureBoundaryError(f'Image of {start.components} is on the pure-state boundary at t={t}')
    return 1 / (8 * abs(h) * math.sqrt(shrink))


def lorentzian_rate(model: DissipativeModel) -> RateFunction:
    """gamma(t) of the model as a rate function; NaN at the zeros of h"""
    def rate(t: float) -> float:
        try:
            return gamma_rate(model, t)
        except PoleError:
            return math.nan
    return rate


def dissipative_master_equation(model: DissipativeModel, t_max: float = DEFAULT_T_MAX) -> MasterEquation:
    """
    H = 0 and a single sigma_minus channel with rate gamma(t); the rate is NaN at the zeros of h
    :param model: DissipativeModel
    :param t_max: horizon for the declared pole times
    :return: MasterEquation
    """
    poles = tuple(pole_times(model, t_max))
    logger.debug('Dissipative model lambda={} W={} ({}), {} poles up to t={}', model.spectral_width, model.coupling,
                 model.regime, len(poles), t_max)
    channel = Channel(jump_operator=SIGMA_MINUS, rate=lorentzian_rate(model), name='sigma_minus', pole_times=poles)
    return MasterEquation.constant(np.zeros((2, 2), dtype=complex), [channel])


def dissipative_basis(model: DissipativeModel, t: float) -> np.ndarray:
    """
    Images of I/2 and sigma_mu/2 under the dissipative dynamics: sigma_{1,2}/2 -> h sigma_{1,2}/2,
    sigma_3/2 -> h^2 sigma_3/2 and I/2 -> I/2 + (h^2 - 1) sigma_3/2
    :param model: DissipativeModel
    :param t: time
    :return: array of shape (4, 2, 2)
    """
    h = h_characteristic(model, t)
    return np.array([IDENTITY_2 / 2 + (h ** 2 - 1) * PAULIS[2] / 2,
                     h * PAULIS[0] / 2, h * PAULIS[1] / 2, h ** 2 * PAULIS[2] / 2])


def dissipative_record(n0: BlochLike, model: DissipativeModel, t: float) -> FlowRecord:
    """
    FlowRecord of the dissipative model from the closed forms. The single channel carries the whole IDF
    :param n0: initial Bloch vector
    :param model: DissipativeModel
    :param t: time
    :return: FlowRecord; status pole at the zeros of h, undefined on the pure-state boundary
    """
    try:
        gamma = gamma_rate(model, t)
    except PoleError:
        return FlowRecord(t=t, idqs=None, idf=None, ridf=None, sub_idf=(None,), gamma=(None,), status=STATUS_POLE)
    try:
        density = dissip_idqs(n0, model, t)
        relative = dissip_ridf(n0, model, t)
    except PureBoundaryError:
        return FlowRecord(t=t, idqs=None, idf=None, ridf=None, sub_idf=(None,), gamma=(gamma,),
                          status=STATUS_UNDEFINED)
    flow = relative * density
    return FlowRecord(t=t, idqs=density, idf=flow, ridf=relative, sub_idf=(flow,), gamma=(gamma,))


def dissipative_series(n0: BlochLike, model: DissipativeModel, t_grid: Sequence[float]) -> List[FlowRecord]:
    """dissipative_record at every grid time; poles inside the grid are flagged, not integrated across"""
    return [dissipative_record(n0, model, float(t)) for t in t_grid]

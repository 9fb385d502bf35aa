"""
Quantum Fisher geometry of parameterized density-matrix families: symmetric logarithmic derivatives, the quantum Fisher
metric g (normalized so that the QFI matrix is 4g), the intrinsic density of states sqrt(det g), and the flow measures
built on its time derivative
"""
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from idflow.constants import numerics
from idflow.errors import EvaluationFailedError, GridTooShortError, IdflowError, NegativeDeterminantError, \
    SingularMetricError, UnsupportedDerivativeError
from idflow.operators import DensityMatrix, MatrixLike, anticommutator, as_matrix, check_hermitian, dagger, \
    hermitian_eig, hermitize, validate_density

StateEvaluator = Callable[[np.ndarray], np.ndarray]
DerivativeEvaluator = Callable[[np.ndarray, int], np.ndarray]


def parameter_point(coords: Sequence[float]) -> np.ndarray:
    """
    Validates a parameter point x0
    :param coords: real coordinates, at least one
    :return: 1-D float array
    """
    point = np.atleast_1d(np.asarray(coords, dtype=float))
    if point.ndim != 1 or point.size < 1:
        raise ValueError(f'A parameter point needs at least one coordinate, got shape {point.shape}')
    if not np.all(np.isfinite(point)):
        raise ValueError(f'Parameter point {point} is not finite')
    return point


@dataclass(frozen=True)
class StateFamily:
    """Differentiable map x0 -> rho(x0), optionally with analytic derivatives d rho / d x0^mu"""
    dim_param: int
    evaluator: StateEvaluator
    derivative: Optional[DerivativeEvaluator] = None
    name: str = ''

    def state(self, x0: Sequence[float]) -> DensityMatrix:
        """Evaluates and validates rho(x0)"""
        point = self._point(x0)
        try:
            return validate_density(self.evaluator(point))
        except (IdflowError, ValueError, ArithmeticError) as err:
            raise EvaluationFailedError(f'Family {self.name or "<unnamed>"} failed at {point}: {err}') from err

    def derivatives(self, x0: Sequence[float], step: Optional[float] = None,
                    richardson: bool = False) -> List[np.ndarray]:
        """
        d rho / d x0^mu for every parameter; analytic when the family provides it, central differences otherwise
        :param x0: parameter point
        :param step: finite-difference step relative to max(1, |x0^mu|)
        :param richardson: extrapolate the central differences (numeric path only)
        :return: list of Hermitian traceless matrices
        """
        point = self._point(x0)
        if self.derivative is None:
            return numeric_derivatives(self, point, step, richardson)

        tol = numerics().spectral_tol
        ret = []
        for mu in range(self.dim_param):
            drho = as_matrix(self.derivative(point, mu))
            check_hermitian(drho, tol, f'analytic derivative {mu}')
            if abs(np.trace(drho)) > tol:
                raise ValueError(f'Analytic derivative {mu} has trace {np.trace(drho):.3e}')
            ret.append(hermitize(drho))
        return ret

    def _point(self, x0: Sequence[float]) -> np.ndarray:
        point = parameter_point(x0)
        if point.size != self.dim_param:
            raise ValueError(f'Family {self.name} takes {self.dim_param} parameters, got {point.size}')
        return point


@dataclass(frozen=True)
class SLDSet:
    """One symmetric logarithmic derivative per parameter"""
    operators: Tuple[np.ndarray, ...]
    kernel_threshold: float

    def __len__(self) -> int:
        return len(self.operators)


@dataclass(frozen=True)
class FisherMetric:
    """Quantum Fisher metric g at a parameter point"""
    g: np.ndarray
    point: Optional[np.ndarray] = None

    @property
    def dim(self) -> int:
        """Number of parameters"""
        return self.g.shape[0]

    @property
    def qfi(self) -> np.ndarray:
        """Quantum Fisher information matrix, 4g"""
        return 4 * self.g


@dataclass(frozen=True)
class MetricPoint:
    """Everything the pipeline computes at one parameter point"""
    state: DensityMatrix
    derivatives: Tuple[np.ndarray, ...]
    slds: SLDSet
    metric: FisherMetric


def sld(rho: MatrixLike, drho: MatrixLike, kernel_threshold: Optional[float] = None,
        strict: bool = True) -> np.ndarray:
    """
    Symmetric logarithmic derivative L solving d rho = 1/2 {rho, L}. In the eigenbasis of rho,
    L_jk = 2 (d rho)_jk / (p_j + p_k) where p_j + p_k exceeds the kernel threshold and 0 otherwise
    :param rho: density matrix
    :param drho: Hermitian traceless derivative of rho
    :param kernel_threshold: eigenvalue sums at or below this are treated as kernel (default from numerics)
    :param strict: raise UnsupportedDerivativeError when d rho has weight on the kernel block; otherwise drop it
    :return: Hermitian L in the original basis
    """
    cfg = numerics()
    threshold = cfg.kernel_threshold if kernel_threshold is None else kernel_threshold
    rho_m = as_matrix(rho)
    drho_m = as_matrix(drho)
    check_hermitian(drho_m, cfg.spectral_tol, 'state derivative')

    spectrum = hermitian_eig(rho_m)
    vecs = spectrum.eigenvectors
    in_basis = dagger(vecs) @ drho_m @ vecs
    denom = spectrum.eigenvalues[:, None] + spectrum.eigenvalues[None, :]
    support = denom > threshold

    leak = float(np.max(np.abs(in_basis[~support]), initial=0.0))
    if leak > cfg.support_tol:
        if strict:
            raise UnsupportedDerivativeError(f'Derivative has weight {leak:.3e} outside the support of the state')
        logger.warning('Dropping kernel components of weight {} from the SLD', leak)

    sld_basis = np.zeros_like(in_basis)
    sld_basis[support] = 2 * in_basis[support] / denom[support]
    return hermitize(vecs @ sld_basis @ dagger(vecs))


def sld_set(rho: MatrixLike, drhos: Sequence[MatrixLike], kernel_threshold: Optional[float] = None,
            strict: bool = True) -> SLDSet:
    """SLDs for every parameter derivative"""
    threshold = numerics().kernel_threshold if kernel_threshold is None else kernel_threshold
    return SLDSet(operators=tuple(sld(rho, d, threshold, strict) for d in drhos), kernel_threshold=threshold)


def numeric_derivatives(family: StateFamily, x0: Sequence[float], step: Optional[float] = None,
                        richardson: bool = False) -> List[np.ndarray]:
    """
    Central differences (rho(x + h e_mu) - rho(x - h e_mu)) / 2h, Hermitized
    :param family: state family
    :param x0: parameter point
    :param step: step relative to max(1, |x0^mu|) (default from numerics)
    :param richardson: combine steps h and h/2 as (4 D(h/2) - D(h)) / 3
    :return: list of derivative matrices
    """
    point = parameter_point(x0)
    rel_step = numerics().fd_step if step is None else step

    def evaluate(x: np.ndarray) -> np.ndarray:
        return family.state(x).matrix

    def central(mu: int, h: float) -> np.ndarray:
        shift = np.zeros_like(point)
        shift[mu] = h
        return hermitize((evaluate(point + shift) - evaluate(point - shift)) / (2 * h))

    ret = []
    for mu in range(point.size):
        h = rel_step * max(1.0, abs(point[mu]))
        coarse = central(mu, h)
        if richardson:
            fine = central(mu, h / 2)
            ret.append((4 * fine - coarse) / 3)
        else:
            ret.append(coarse)
    logger.debug('Numeric derivatives of {} at {} with step {}', family.name, point, rel_step)
    return ret


def qfm(rho: MatrixLike, slds: SLDSet, point: Optional[Sequence[float]] = None) -> FisherMetric:
    """
    Quantum Fisher metric g_{mu nu} = 1/8 Re Tr[{L_mu, L_nu} rho]
    :param rho: density matrix
    :param slds: SLDs of rho
    :param point: parameter point to record on the metric
    :return: FisherMetric
    """
    rho_m = as_matrix(rho)
    size = len(slds)
    g = np.zeros((size, size))
    worst_imag = 0.0
    for mu in range(size):
        for nu in range(mu, size):
            value = np.trace(anticommutator(slds.operators[mu], slds.operators[nu]) @ rho_m) / 8
            worst_imag = max(worst_imag, abs(value.imag))
            g[mu, nu] = g[nu, mu] = value.real
    if worst_imag > numerics().imaginary_tol:
        logger.warning('Fisher metric has imaginary residue {}', worst_imag)
    return FisherMetric(g=g, point=None if point is None else parameter_point(point))


def metric_at(family: StateFamily, x0: Sequence[float], step: Optional[float] = None, richardson: bool = False,
              strict: bool = True) -> MetricPoint:
    """
    Runs the pipeline state -> derivatives -> SLDs -> metric at one point
    :param family: state family
    :param x0: parameter point
    :param step: finite-difference step when the family has no analytic derivatives
    :param richardson: Richardson extrapolation for numeric derivatives
    :param strict: see sld
    :return: MetricPoint
    """
    state = family.state(x0)
    derivatives = family.derivatives(x0, step, richardson)
    slds = sld_set(state, derivatives, strict=strict)
    return MetricPoint(state=state, derivatives=tuple(derivatives), slds=slds, metric=qfm(state, slds, x0))


def metric_eigenvalues(metric: FisherMetric) -> np.ndarray:
    """Eigenvalues of g, rejecting negatives beyond the PSD tolerance"""
    values = np.linalg.eigvalsh((metric.g + metric.g.T) / 2)
    tol = numerics().psd_tol
    if values[0] < -tol:
        raise NegativeDeterminantError(f'Metric eigenvalue {values[0]:.3e} is below -{tol:.1e}')
    return values


def idqs(metric: FisherMetric) -> float:
    """
    Intrinsic density of states sqrt(det g). The determinant is the eigenvalue product taken in log space; noise
    eigenvalues in [-psd_tol, 0] count as zero
    :param metric: FisherMetric
    :return: non-negative density
    """
    values = np.clip(metric_eigenvalues(metric), 0.0, None)
    if np.any(values == 0):
        return 0.0
    return float(np.exp(0.5 * np.sum(np.log(values))))


def inverse_metric(metric: FisherMetric, singular_threshold: Optional[float] = None) -> np.ndarray:
    """
    g^-1 through the eigendecomposition; refuses near-singular metrics instead of regularizing
    :param metric: FisherMetric
    :param singular_threshold: smallest eigenvalue accepted (default from numerics)
    :return: inverse matrix
    """
    threshold = numerics().singular_threshold if singular_threshold is None else singular_threshold
    values, vectors = np.linalg.eigh((metric.g + metric.g.T) / 2)
    if values[0] <= threshold:
        raise SingularMetricError(f'Metric eigenvalue {values[0]:.3e} is at or below {threshold:.1e}')
    return (vectors / values) @ vectors.T


def metric_time_derivative(drho_dt: MatrixLike, slds: SLDSet, dslds_param: Sequence[MatrixLike]) -> np.ndarray:
    """
    dg/dt from the SLDs and the time derivative of the family. With D_mu = d/dx0^mu (d rho/dt),
    dg_{mu nu}/dt = 1/4 Re(Tr[L_nu D_mu] + Tr[L_mu D_nu] - 1/2 Tr[{L_mu, L_nu} d rho/dt])
    which is the operator form Tr[L_{mu nu}(d rho/dt)] carried in the normalization of g
    :param drho_dt: d rho / dt
    :param slds: SLDs of rho
    :param dslds_param: D_mu, one per parameter
    :return: symmetric d x d matrix
    """
    rate = as_matrix(drho_dt)
    size = len(slds)
    if len(dslds_param) != size:
        raise ValueError(f'Expected {size} parameter derivatives of d rho/dt, got {len(dslds_param)}')
    directional = [as_matrix(d) for d in dslds_param]
    ops = slds.operators

    out = np.zeros((size, size))
    for mu in range(size):
        for nu in range(mu, size):
            value = np.trace(ops[nu] @ directional[mu]) + np.trace(ops[mu] @ directional[nu]) \
                - 0.5 * np.trace(anticommutator(ops[mu], ops[nu]) @ rate)
            out[mu, nu] = out[nu, mu] = value.real / 4
    return out


def ridf(rho: MatrixLike, drho_dt: MatrixLike, slds: SLDSet, dslds_param: Sequence[MatrixLike],
         metric: FisherMetric) -> float:
    """
    Relative intrinsic density flow 1/2 tr[g^-1 dg/dt]
    :param rho: density matrix (dimension check only; the SLDs already encode it)
    :param drho_dt: d rho / dt
    :param slds: SLDs of rho
    :param dslds_param: directional derivatives d/dx0^mu (d rho/dt); for generator-driven flows K(t) d_mu rho
    :param metric: Fisher metric of rho
    :return: RIDF
    """
    as_matrix(rho)
    inverse = inverse_metric(metric)
    return float(0.5 * np.trace(inverse @ metric_time_derivative(drho_dt, slds, dslds_param)))


def idf(ridf_value: float, idqs_value: float) -> float:
    """Intrinsic density flow, RIDF times IDQS"""
    return ridf_value * idqs_value


def qfif_single(metric_series: Sequence[FisherMetric], curve_tangent: Sequence[float],
                times: Sequence[float]) -> np.ndarray:
    """
    Single-parameter Fisher information flow along a fixed curve tangent: F(t) = 4 x'^T g(t) x' differentiated by
    central differences on a uniform grid
    :param metric_series: time-ordered metrics
    :param curve_tangent: tangent x' of the curve in parameter space
    :param times: sample times, uniform spacing
    :return: dF/dt at every sample
    """
    grid = np.asarray(times, dtype=float)
    if len(metric_series) < 3 or grid.size != len(metric_series):
        raise GridTooShortError(f'Need at least 3 matching samples, got {len(metric_series)} metrics and '
                                f'{grid.size} times')
    steps = np.diff(grid)
    if np.any(steps <= 0) or np.ptp(steps) > 1e-9 * max(1.0, float(np.max(np.abs(grid)))):
        raise ValueError('Times must be ascending on a uniform grid')

    tangent = np.asarray(curve_tangent, dtype=float)
    fisher = np.array([4 * tangent @ m.g @ tangent for m in metric_series])
    return np.gradient(fisher, grid)

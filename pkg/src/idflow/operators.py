"""Dense complex-matrix kernel: Hermitian algebra, spectra, density matrices and the master-equation generator"""
from dataclasses import dataclass
from typing import TYPE_CHECKING, Optional, Sequence, Union

import numpy as np
from loguru import logger

from idflow.constants import numerics
from idflow.errors import DimMismatchError, NegativeEigenvalueError, NotHermitianError, TraceNotOneError

if TYPE_CHECKING:
    from idflow.dynamics import MasterEquation  # pragma: no cover

IDENTITY_2 = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (PAULI_X, PAULI_Y, PAULI_Z)
# Lowering operator; drives the Bloch vector towards n3 = -1
SIGMA_MINUS = (PAULI_X - 1j * PAULI_Y) / 2
SIGMA_PLUS = (PAULI_X + 1j * PAULI_Y) / 2


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, unit-trace, positive-semidefinite matrix. Build through validate_density"""
    matrix: np.ndarray

    @property
    def dim(self) -> int:
        """Hilbert space dimension"""
        return self.matrix.shape[0]


@dataclass(frozen=True)
class Spectrum:
    """Ascending eigenvalues with phase-fixed eigenvectors stored as columns"""
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        """V diag(p) V^dagger"""
        return (self.eigenvectors * self.eigenvalues) @ self.eigenvectors.conj().T


MatrixLike = Union[np.ndarray, DensityMatrix]


def as_matrix(m: MatrixLike) -> np.ndarray:
    """
    Converts the input to a square, finite, complex 2-D array
    :param m: array-like or DensityMatrix
    :return: complex numpy array
    """
    if isinstance(m, DensityMatrix):
        return m.matrix
    arr = np.asarray(m, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 1:
        raise DimMismatchError(f'Expected a non-empty square matrix, got shape {arr.shape}')
    if not np.all(np.isfinite(arr)):
        raise ValueError('Matrix has non-finite entries')
    if arr.shape[0] > numerics().max_dim:
        logger.warning('Dimension {} exceeds the supported cap of {}', arr.shape[0], numerics().max_dim)
    return arr


def dagger(m: np.ndarray) -> np.ndarray:
    """Conjugate transpose"""
    return m.conj().T


def hermiticity_defect(m: np.ndarray) -> float:
    """Largest entrywise |m - m^dagger|"""
    return float(np.max(np.abs(m - dagger(m))))


def hermitize(m: np.ndarray) -> np.ndarray:
    """(m + m^dagger) / 2"""
    return (m + dagger(m)) / 2


def check_hermitian(m: np.ndarray, tol: float, what: str = 'matrix') -> None:
    """Raises NotHermitianError if the Hermiticity defect of m exceeds tol"""
    defect = hermiticity_defect(m)
    if defect > tol:
        raise NotHermitianError(f'{what} is not Hermitian: max |m - m^dagger| = {defect:.3e} > {tol:.1e}')


def _check_same_dim(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise DimMismatchError(f'Dimension mismatch: {a.shape} vs {b.shape}')


def commutator(a: MatrixLike, b: MatrixLike) -> np.ndarray:
    """[a, b] = ab - ba"""
    a_m, b_m = as_matrix(a), as_matrix(b)
    _check_same_dim(a_m, b_m)
    return a_m @ b_m - b_m @ a_m


def anticommutator(a: MatrixLike, b: MatrixLike) -> np.ndarray:
    """{a, b} = ab + ba"""
    a_m, b_m = as_matrix(a), as_matrix(b)
    _check_same_dim(a_m, b_m)
    return a_m @ b_m + b_m @ a_m


def _phase_fix(vectors: np.ndarray, tol: float) -> np.ndarray:
    """Makes the first non-negligible component of every column real and positive"""
    fixed = vectors.copy()
    for col in range(fixed.shape[1]):
        column = fixed[:, col]
        lead = np.flatnonzero(np.abs(column) > tol)
        if lead.size:
            pivot = column[lead[0]]
            fixed[:, col] = column * (abs(pivot) / pivot)
    return fixed


def _lexicographic_key(vector: np.ndarray) -> tuple:
    # descending lexicographic order on (real, imag) of each component
    return tuple(x for c in vector for x in (-round(c.real, 12), -round(c.imag, 12)))


def hermitian_eig(m: MatrixLike) -> Spectrum:
    """
    Eigendecomposition of a Hermitian matrix with a deterministic output. Eigenvalues are ascending, every eigenvector
    has its first non-negligible component real and positive, and columns sharing an eigenvalue (within the spectral
    tolerance) are ordered lexicographically
    :param m: Hermitian matrix
    :return: Spectrum
    """
    arr = as_matrix(m)
    tol = numerics().spectral_tol
    check_hermitian(arr, numerics().algebraic_tol * max(1.0, float(np.max(np.abs(arr)))))
    values, vectors = np.linalg.eigh(hermitize(arr))
    vectors = _phase_fix(vectors, tol)

    order = list(range(len(values)))
    start = 0
    while start < len(values):
        stop = start + 1
        while stop < len(values) and values[stop] - values[start] <= tol:
            stop += 1
        if stop - start > 1:
            order[start:stop] = sorted(order[start:stop], key=lambda k: _lexicographic_key(vectors[:, k]))
        start = stop

    return Spectrum(eigenvalues=values[order], eigenvectors=vectors[:, order])


def validate_density(m: MatrixLike, eig_tol: Optional[float] = None,
                     trace_tol: Optional[float] = None) -> DensityMatrix:
    """
    Checks the density-matrix invariants and wraps the matrix
    :param m: square matrix
    :param eig_tol: smallest allowed eigenvalue is -eig_tol (default: spectral tolerance)
    :param trace_tol: allowed |Tr m - 1| (default: trace tolerance)
    :return: DensityMatrix
    """
    arr = as_matrix(m)
    cfg = numerics()
    eig_tol = cfg.spectral_tol if eig_tol is None else eig_tol
    trace_tol = cfg.trace_tol if trace_tol is None else trace_tol

    check_hermitian(arr, cfg.algebraic_tol, 'density matrix')

    trace = np.trace(arr)
    if abs(trace - 1) > trace_tol:
        raise TraceNotOneError(f'Trace is {trace.real:.12g}, |Tr - 1| = {abs(trace - 1):.3e} > {trace_tol:.1e}')

    lowest = float(np.linalg.eigvalsh(hermitize(arr))[0])
    if lowest < -eig_tol:
        raise NegativeEigenvalueError(f'Smallest eigenvalue {lowest:.6g} is below -{eig_tol:.1e}')

    return DensityMatrix(matrix=arr.copy())


def bloch_components(rho: MatrixLike) -> np.ndarray:
    """Bloch vector n^mu = Tr[rho sigma_mu] of a qubit operator"""
    arr = as_matrix(rho)
    if arr.shape != (2, 2):
        raise DimMismatchError(f'Bloch components need a 2x2 operator, got {arr.shape}')
    return np.array([np.trace(arr @ p).real for p in PAULIS])


def apply_generator(me: 'MasterEquation', t: float, rho: MatrixLike,
                    rates: Optional[Sequence[float]] = None) -> np.ndarray:
    """
    Applies the time-local generator K(t) to an operator
    K(t) rho = -i[H, rho] + sum_i gamma_i(t) [A_i rho A_i^dagger - 1/2 {A_i^dagger A_i, rho}]
    The generator is linear, so rho may be any operator (state derivatives included) or a stack of operators with
    shape (k, d, d)
    :param me: master equation
    :param t: time
    :param rho: operator, or stack of operators, to act on
    :param rates: channel rates at t when the caller already evaluated them
    :return: K(t) rho with the shape of rho
    """
    arr = np.asarray(rho.matrix if isinstance(rho, DensityMatrix) else rho, dtype=complex)
    if arr.ndim == 2:
        arr = as_matrix(arr)
    elif arr.ndim != 3 or arr.shape[1] != arr.shape[2]:
        raise DimMismatchError(f'Expected an operator or a stack of operators, got shape {arr.shape}')

    hamiltonian = me.hamiltonian_at(t)
    _check_same_dim(hamiltonian, arr[0] if arr.ndim == 3 else arr)
    if rates is None:
        rates = [channel.rate(t) for channel in me.channels]

    out = -1j * (hamiltonian @ arr - arr @ hamiltonian)
    for channel, rate in zip(me.channels, rates):
        if rate == 0:
            continue
        jump = channel.jump_operator
        _check_same_dim(jump, hamiltonian)
        jump_dag = dagger(jump)
        number = jump_dag @ jump
        out = out + rate * (jump @ arr @ jump_dag - 0.5 * (number @ arr + arr @ number))
    return out

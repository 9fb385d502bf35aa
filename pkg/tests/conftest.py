"""Pytest directory-specific hook implementations"""
import math

import numpy as np
import pytest

import idflow


@pytest.fixture(autouse=True, name='default_numerics')
def fixture_default_numerics():
    """Every test starts and ends with the default tolerances"""
    idflow.constants.reset_numerics()
    yield idflow.constants.numerics()
    idflow.constants.reset_numerics()


@pytest.fixture(name='rng')
def fixture_rng():
    """Seeded generator so random draws are reproducible"""
    return np.random.default_rng(20221017)


@pytest.fixture(name='strong_model')
def fixture_strong_model():
    """Dissipative model in the strong coupling regime, W = 3 lambda"""
    return idflow.qubit.DissipativeModel(spectral_width=1.0, coupling=3.0)


@pytest.fixture(name='weak_model')
def fixture_weak_model():
    """Dissipative model in the weak coupling regime, W = 0.3 lambda"""
    return idflow.qubit.DissipativeModel(spectral_width=1.0, coupling=0.3)


@pytest.fixture(name='bloch')
def fixture_bloch():
    """Cartesian Bloch family"""
    return idflow.qubit.bloch_family()


@pytest.fixture(name='figure_point')
def fixture_figure_point():
    """Initial Bloch vector (0, 0, sqrt(0.9))"""
    return 0.0, 0.0, math.sqrt(0.9)


@pytest.fixture(name='random_density')
def fixture_random_density(rng):
    """Factory for full-rank random density matrices"""
    def make(dim: int) -> np.ndarray:
        a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        rho = a @ a.conj().T + 0.05 * np.eye(dim)
        return rho / np.trace(rho).real
    return make


@pytest.fixture(name='random_hermitian')
def fixture_random_hermitian(rng):
    """Factory for random Hermitian matrices, optionally traceless"""
    def make(dim: int, traceless: bool = False) -> np.ndarray:
        a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        herm = (a + a.conj().T) / 2
        if traceless:
            herm = herm - np.trace(herm) / dim * np.eye(dim)
        return herm
    return make


@pytest.fixture(name='small_config')
def fixture_small_config():
    """Default experiment on an 11 x 11 grid"""
    return idflow.experiment.parse_config('{"grid": {"resolution": 11}}')

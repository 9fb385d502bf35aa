"""Tests idflow.fisher"""
import math

import numpy as np
import pytest

import idflow
from idflow.operators import PAULIS, PAULI_X, SIGMA_MINUS


def _random_ball_points(rng, count, max_radius):
    directions = rng.normal(size=(count, 3))
    directions /= np.linalg.norm(directions, axis=1)[:, None]
    return directions * max_radius * rng.uniform(0, 1, size=count)[:, None] ** (1 / 3)


def test_parameter_point_validation():
    """A parameter point is a finite 1-D array with at least one coordinate"""
    assert idflow.fisher.parameter_point(0.5).tolist() == [0.5]
    with pytest.raises(ValueError):
        idflow.fisher.parameter_point([])
    with pytest.raises(ValueError):
        idflow.fisher.parameter_point([0.1, math.inf])


def test_family_rejects_wrong_arity(bloch):
    """Evaluating a 3-parameter family at a 2-vector raises"""
    with pytest.raises(ValueError):
        bloch.state((0.1, 0.2))


def test_family_wraps_evaluation_failures(bloch):
    """A point outside the ball surfaces as an evaluation failure"""
    with pytest.raises(idflow.errors.EvaluationFailedError):
        bloch.state((1.0, 1.0, 0.0))


def test_sld_at_maximally_mixed_state():
    """At rho = I/2 the SLD of sigma_x / 2 is sigma_x"""
    assert np.allclose(idflow.fisher.sld(np.eye(2) / 2, PAULI_X / 2), PAULI_X)


def test_sld_solves_defining_equation(random_density, random_hermitian):
    """1/2 {rho, L} = d rho on a full-rank qutrit"""
    rho = random_density(3)
    drho = random_hermitian(3, traceless=True)
    sld = idflow.fisher.sld(rho, drho)
    assert np.allclose((rho @ sld + sld @ rho) / 2, drho, atol=1e-9)
    assert np.allclose(sld, sld.conj().T)


def test_sld_kernel_support():
    """A derivative with weight on the kernel is rejected in strict mode and truncated otherwise"""
    rho = np.diag([1.0, 0.0])
    drho = np.diag([0.5, -0.5])
    with pytest.raises(idflow.errors.UnsupportedDerivativeError):
        idflow.fisher.sld(rho, drho)
    assert np.allclose(idflow.fisher.sld(rho, drho, strict=False), np.diag([0.5, 0.0]))


def test_sld_pure_state_tangent_is_supported():
    """A derivative that rotates a pure state only couples the support to the kernel"""
    rho = np.diag([1.0, 0.0])
    sld = idflow.fisher.sld(rho, PAULI_X / 2)
    assert np.allclose(sld, PAULI_X)


@pytest.mark.parametrize('theta', [0.1, 0.7, 1.3])
def test_metric_of_pure_rotation(theta):
    """cos(theta)|0> + sin(theta)|1> has g = 1 and a QFI of 4"""
    def psi(x):
        return np.array([math.cos(x[0]), math.sin(x[0])])

    def dpsi(x):
        return np.array([-math.sin(x[0]), math.cos(x[0])])

    family = idflow.fisher.StateFamily(
        dim_param=1, evaluator=lambda x: np.outer(psi(x), psi(x)),
        derivative=lambda x, mu: np.outer(dpsi(x), psi(x)) + np.outer(psi(x), dpsi(x)), name='rotation')
    metric = idflow.fisher.metric_at(family, (theta,)).metric
    assert np.allclose(metric.g, [[1.0]])
    assert np.allclose(metric.qfi, [[4.0]])


def test_metric_at_bloch_center(bloch):
    """At the center of the ball g = I/4, the QFI is the identity and the IDQS is 1/8"""
    point = idflow.fisher.metric_at(bloch, (0, 0, 0))
    assert np.allclose(point.metric.g, np.eye(3) / 4)
    assert np.allclose(point.metric.qfi, np.eye(3))
    assert idflow.fisher.idqs(point.metric) == pytest.approx(0.125, abs=1e-12)
    assert point.metric.dim == 3
    assert len(point.slds) == 3


@pytest.mark.parametrize('radius_squared,expected', [(0.0, 0.125), (0.9, 0.39528470752104744), (0.99, 1.25)])
def test_bloch_idqs_values(bloch, radius_squared, expected):
    """IDQS of the Bloch family is 1 / (8 sqrt(1 - |n|^2))"""
    point = (0.0, 0.0, math.sqrt(radius_squared))
    assert idflow.fisher.idqs(idflow.fisher.metric_at(bloch, point).metric) == pytest.approx(expected, rel=1e-10)
    assert idflow.qubit.bloch_idqs(point) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize('richardson', [False, True])
def test_numeric_derivatives_match_closed_form(bloch, rng, richardson):
    """The finite-difference pipeline reproduces the closed-form IDQS inside |n| <= 0.99"""
    numeric = idflow.fisher.StateFamily(dim_param=3, evaluator=bloch.evaluator, name='numeric-bloch')
    for n in _random_ball_points(rng, 100, 0.99):
        metric = idflow.fisher.metric_at(numeric, n, richardson=richardson).metric
        assert idflow.fisher.idqs(metric) == pytest.approx(idflow.qubit.bloch_idqs(n), rel=1e-6)


def test_analytic_derivatives_are_checked():
    """An analytic derivative with non-zero trace is refused"""
    family = idflow.fisher.StateFamily(dim_param=1, evaluator=lambda x: np.eye(2) / 2,
                                       derivative=lambda x, mu: np.eye(2))
    with pytest.raises(ValueError):
        family.derivatives((0.0,))


def _spherical_points(rng, count):
    return np.column_stack([rng.uniform(0.05, 0.95, count), rng.uniform(0.1, math.pi - 0.1, count),
                            rng.uniform(-math.pi, math.pi, count)])


def test_idqs_reparameterization(bloch, rng):
    """Spherical coordinates scale the IDQS by the Jacobian r^2 sin(theta)"""
    spherical = idflow.qubit.spherical_family()
    for r, theta, phi in _spherical_points(rng, 50):
        sph = idflow.fisher.idqs(idflow.fisher.metric_at(spherical, (r, theta, phi)).metric)
        cart = idflow.fisher.idqs(idflow.fisher.metric_at(bloch, idflow.qubit.spherical_point(r, theta, phi)).metric)
        assert sph / cart == pytest.approx(r ** 2 * math.sin(theta), rel=1e-8)


def test_ridf_reparameterization_invariant(strong_model, rng):
    """The RIDF of the evolved family does not depend on the coordinates of the initial family"""
    me = idflow.qubit.dissipative_master_equation(strong_model)
    t = 0.3
    basis = idflow.qubit.dissipative_basis(strong_model, t)
    spherical = idflow.qubit.spherical_family()
    for r, theta, phi in _spherical_points(rng, 50):
        n0 = idflow.qubit.spherical_point(r, theta, phi)
        rho = idflow.operators.validate_density(basis[0] + sum(c * b for c, b in zip(n0, basis[1:])))

        initial = spherical.derivatives((r, theta, phi))
        # d rho0 / d x^mu = sum_i c_i sigma_i / 2, so the evolved derivative is sum_i c_i basis[i + 1]
        spherical_derivs = [sum(np.trace(d @ p).real * b for p, b in zip(PAULIS, basis[1:])) for d in initial]

        cart_record = idflow.dynamics.flow_record(me, t, rho, list(basis[1:]))
        sph_record = idflow.dynamics.flow_record(me, t, rho, spherical_derivs)
        assert sph_record.ridf == pytest.approx(cart_record.ridf, rel=1e-8)
        assert sph_record.idqs / cart_record.idqs == pytest.approx(r ** 2 * math.sin(theta), rel=1e-8)


def test_idqs_rejects_negative_metric():
    """A metric eigenvalue below the PSD tolerance is an error, noise around zero is clipped"""
    with pytest.raises(idflow.errors.NegativeDeterminantError):
        idflow.fisher.idqs(idflow.fisher.FisherMetric(g=np.diag([1.0, -1.0])))
    assert idflow.fisher.idqs(idflow.fisher.FisherMetric(g=np.diag([1.0, -1e-12]))) == 0.0


def test_inverse_metric():
    """The inverse is exact on regular metrics and refused on singular ones"""
    g = np.array([[2.0, 0.5], [0.5, 1.0]])
    assert np.allclose(idflow.fisher.inverse_metric(idflow.fisher.FisherMetric(g=g)) @ g, np.eye(2))
    with pytest.raises(idflow.errors.SingularMetricError):
        idflow.fisher.inverse_metric(idflow.fisher.FisherMetric(g=np.diag([1.0, 0.0])))


def test_metric_time_derivative_decay_at_center():
    """Unit-rate decay at the maximally mixed state: dg/dt = diag(-1/4, -1/4, -1/2) and RIDF = -2"""
    me = idflow.dynamics.MasterEquation.constant(np.zeros((2, 2)), [
        idflow.dynamics.Channel(SIGMA_MINUS, idflow.dynamics.constant_rate(1.0))])
    rho = np.eye(2) / 2
    slds = idflow.fisher.sld_set(rho, [p / 2 for p in PAULIS])
    drho_dt = idflow.operators.apply_generator(me, 0.0, rho)
    directional = [idflow.operators.apply_generator(me, 0.0, p / 2) for p in PAULIS]

    g_dot = idflow.fisher.metric_time_derivative(drho_dt, slds, directional)
    assert np.allclose(g_dot, np.diag([-0.25, -0.25, -0.5]))

    metric = idflow.fisher.qfm(rho, slds)
    assert idflow.fisher.ridf(rho, drho_dt, slds, directional, metric) == pytest.approx(-2.0)
    assert idflow.fisher.idf(-2.0, 0.125) == pytest.approx(-0.25)


def test_metric_time_derivative_needs_one_derivative_per_parameter():
    """Mismatched D_mu counts raise"""
    slds = idflow.fisher.sld_set(np.eye(2) / 2, [p / 2 for p in PAULIS])
    with pytest.raises(ValueError):
        idflow.fisher.metric_time_derivative(np.zeros((2, 2)), slds, [np.zeros((2, 2))])


def test_qfif_single():
    """F(t) = 4 t^2 along the first coordinate has derivative 8t at the interior samples"""
    times = np.linspace(0.0, 1.0, 11)
    series = [idflow.fisher.FisherMetric(g=np.diag([t ** 2, 1.0])) for t in times]
    flow = idflow.fisher.qfif_single(series, (1.0, 0.0), times)
    assert np.allclose(flow[1:-1], 8 * times[1:-1])


def test_qfif_single_constant_series():
    """A metric that does not move has no flow"""
    metric = idflow.fisher.FisherMetric(g=np.array([[0.5, 0.1], [0.1, 0.3]]))
    times = np.linspace(0.0, 2.0, 21)
    assert np.all(idflow.fisher.qfif_single([metric] * 21, (0.6, -0.8), times) == 0.0)


def test_qfif_single_dissipative_sign(strong_model):
    """Along e3 from (0, 0, 0.4) the Fisher information falls where gamma > 0 and rises where gamma < 0"""
    n0 = (0.0, 0.0, 0.4)
    times = np.linspace(0.05, 2.0, 400)
    series = []
    for t in times:
        basis = idflow.qubit.dissipative_basis(strong_model, t)
        rho = idflow.operators.validate_density(basis[0] + sum(c * b for c, b in zip(n0, basis[1:])))
        series.append(idflow.fisher.qfm(rho, idflow.fisher.sld_set(rho, list(basis[1:]))))
    flow = idflow.fisher.qfif_single(series, (0.0, 0.0, 1.0), times)

    step = times[1] - times[0]
    turns = idflow.qubit.pole_times(strong_model, 2.0) + idflow.qubit.rate_sign_change_times(strong_model, 2.0)
    checked = 0
    for t, value in zip(times[1:-1], flow[1:-1]):
        if min(abs(t - turn) for turn in turns) < 2 * step:
            continue
        assert np.sign(value) == -np.sign(idflow.qubit.gamma_rate(strong_model, t))
        checked += 1
    assert checked > 350


def test_qfif_single_unitary(bloch, random_hermitian):
    """Unitary evolution leaves the Fisher information along any tangent unchanged"""
    ham = random_hermitian(2)
    x0 = (0.2, -0.3, 0.4)
    times = np.linspace(0.0, 1.0, 11)
    series = [idflow.fisher.metric_at(idflow.dynamics.unitary_family(bloch, ham, t), x0).metric for t in times]
    assert np.allclose(idflow.fisher.qfif_single(series, (0.3, 0.5, -0.2), times), 0.0, atol=1e-8)


def test_qfif_single_grid_checks():
    """Fewer than three samples or a non-uniform grid is refused"""
    metrics = [idflow.fisher.FisherMetric(g=np.eye(1))] * 3
    with pytest.raises(idflow.errors.GridTooShortError):
        idflow.fisher.qfif_single(metrics[:2], (1.0,), [0.0, 1.0])
    with pytest.raises(ValueError):
        idflow.fisher.qfif_single(metrics, (1.0,), [0.0, 1.0, 3.0])

"""Tests idflow.experiment"""
import json
import math

import numpy as np
import pytest
from pydantic import ValidationError

import idflow


def test_defaults_reproduce_figure():
    """An empty document is the dissipative-channel figure"""
    config = idflow.experiment.parse_config('{}')
    assert config.model.dissipative.coupling == 3.0
    assert config.model.dissipative.spectral_width == 1.0
    assert config.model.regime == 'strong'
    assert config.grid.plane == ('n1', 'n3')
    assert config.grid.fixed_axis == 'n2'
    assert config.grid.fixed_value == 0.0
    assert config.grid.shape == (101, 101)
    assert config.times.snapshots == (0.02, 0.1, 0.5, 1.0)
    assert config.outputs.fields == ('idqs', 'idf', 'ridf')
    assert [p.name for p in config.evolve.points] == ['rho1', 'rho2', 'rho3', 'rho4']
    assert config.evolve.points[0].n == pytest.approx((0.0, 0.0, math.sqrt(0.9)))
    assert idflow.experiment.parse_config('') == config


def test_aliases_and_regime():
    """lambda and W are the document names of the bath parameters"""
    config = idflow.experiment.parse_config('{"model": {"dissipative": {"lambda": 2.0, "W": 0.2}}}')
    assert config.model.regime == 'weak'
    assert config.model.time_unit == 0.5
    assert config.physical_time(1.0) == 0.5
    assert config.t_grid()[-1] == pytest.approx(1.5)
    assert config.dissipative_model() == idflow.qubit.DissipativeModel(2.0, 0.2)


def test_t_grid():
    """steps + 1 uniform samples over [0, t_max]"""
    config = idflow.experiment.parse_config('{"times": {"t_max": 2.0, "steps": 4, "snapshots": [1.0]}}')
    assert np.allclose(config.t_grid(), [0.0, 0.5, 1.0, 1.5, 2.0])


@pytest.mark.parametrize('document,error,path_part', [
    ('{"grid": {"resolution": 1}}', idflow.errors.RangeError, 'resolution'),
    ('{"grid": {"resolution": [11, 1]}}', idflow.errors.RangeError, 'resolution'),
    ('{"model": {"dissipative": {"lambda": -1}}}', idflow.errors.RangeError, 'lambda'),
    ('{"model": {"dissipative": {"W": -0.5}}}', idflow.errors.RangeError, 'W'),
    ('{"times": {"t_max": 1.0, "snapshots": [2.0]}}', idflow.errors.RangeError, 'times'),
    ('{"times": {"steps": 0}}', idflow.errors.RangeError, 'steps'),
    ('{"grid": {"ranges": [[1, -1], [-1, 1]]}}', idflow.errors.RangeError, 'ranges'),
    ('{"witness": {"threshold": -1}}', idflow.errors.RangeError, 'threshold'),
    ('{"evolve": {"points": [{"name": "far", "n": [1, 1, 0]}]}}', idflow.errors.RangeError, 'evolve'),
    ('{"unknown": 1}', idflow.errors.SchemaError, 'unknown'),
    ('{"grid": {"plane": ["n1", "n1"]}}', idflow.errors.SchemaError, 'plane'),
    ('{"grid": {"plane": ["n1", "n2"], "fixed": {"n1": 0.1}}}', idflow.errors.SchemaError, 'grid'),
    ('{"outputs": {"fields": ["entropy"]}}', idflow.errors.SchemaError, 'fields'),
    ('{"model": {"dissipative": {}, "custom": {}}}', idflow.errors.SchemaError, 'model'),
])
def test_invalid_documents(document, error, path_part):
    """Each invalid document raises the right error with a path to the offending field"""
    with pytest.raises(error) as err:
        idflow.experiment.parse_config(document)
    assert path_part in err.value.path


@pytest.mark.parametrize('text', ['{"grid": ', '[1, 2]', '"text"'])
def test_not_a_json_object(text):
    """Broken JSON or a non-object document is a schema error at the root"""
    with pytest.raises(idflow.errors.SchemaError) as err:
        idflow.experiment.parse_config(text)
    assert err.value.path == '$'


def test_custom_model():
    """A custom model builds its master equation from [re, im] matrices"""
    document = {'model': {'custom': {
        'hamiltonian': [[[0.5, 0], [0, 0]], [[0, 0], [-0.5, 0]]],
        'channels': [{'jump_operator': [[[0, 0], [0, 0]], [[1, 0], [0, 0]]], 'rate': {'constant': 0.7}}]}}}
    config = idflow.experiment.parse_config(json.dumps(document))
    assert config.dissipative_model() is None
    assert config.model.regime is None
    assert config.model.time_unit == 1.0
    me = config.master_equation()
    assert me.rates(0.3) == [0.7]
    assert me.channels[0].name == 'channel0'
    assert np.allclose(me.channels[0].jump_operator, idflow.operators.SIGMA_MINUS)
    assert np.allclose(me.hamiltonian_at(0.0), idflow.operators.PAULI_Z / 2)


def test_custom_model_rejects_non_hermitian_hamiltonian():
    """The Hamiltonian must be Hermitian"""
    document = {'model': {'custom': {'hamiltonian': [[[0, 0], [1, 0]], [[0, 0], [0, 0]]]}}}
    with pytest.raises(idflow.errors.SchemaError) as err:
        idflow.experiment.parse_config(json.dumps(document))
    assert 'hamiltonian' in err.value.path


def test_rate_forms():
    """Exactly one rate form; tables interpolate linearly and are NaN outside their range"""
    table = idflow.experiment.RateSpec.model_validate({'table': {'times': [0, 1, 2], 'values': [0, 2, -2]}}).build()
    assert table(0.5) == pytest.approx(1.0)
    assert table(1.5) == pytest.approx(0.0)
    assert math.isnan(table(2.5))

    lorentzian = idflow.experiment.RateSpec.model_validate({'lorentzian': {'W': 3.0}}).build()
    model = idflow.qubit.DissipativeModel(1.0, 3.0)
    assert lorentzian(0.2) == pytest.approx(idflow.qubit.gamma_rate(model, 0.2))

    with pytest.raises(ValidationError):
        idflow.experiment.RateSpec.model_validate({'constant': 1.0, 'table': {'times': [0, 1], 'values': [0, 1]}})


def test_rate_table_must_cover_run():
    """A rate table shorter than t_max is refused"""
    document = {'times': {'t_max': 3.0},
                'model': {'custom': {'channels': [
                    {'jump_operator': [[[0, 0], [0, 0]], [[1, 0], [0, 0]]], 'name': 'short',
                     'rate': {'table': {'times': [0, 1], 'values': [1, 1]}}}]}}}
    with pytest.raises(idflow.errors.RangeError):
        idflow.experiment.parse_config(json.dumps(document))


def test_master_equation_of_dissipative_model():
    """The dissipative model declares its poles up to t_max"""
    config = idflow.experiment.parse_config('{}')
    me = config.master_equation()
    assert list(me.pole_times()) == idflow.qubit.pole_times(config.dissipative_model(), 3.0)

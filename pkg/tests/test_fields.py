"""Tests idflow.fields"""
import json
import math

import numpy as np
import pytest

import idflow
from idflow.constants import MASK_BOUNDARY, MASK_NONE, MASK_POLE


def _config(**grid):
    document = {'grid': {'resolution': 11, **grid}}
    return idflow.experiment.parse_config(json.dumps(document))


def test_grid_axis_is_antisymmetric():
    """A symmetric range gives an axis with x[i] = -x[-1 - i] and an exact zero in the middle"""
    axis = idflow.fields.grid_axis(-1.0, 1.0, 21)
    assert np.array_equal(axis, -axis[::-1])
    assert axis[10] == 0.0
    assert idflow.fields.grid_axis(0.0, 1.0, 3).tolist() == [0.0, 0.5, 1.0]


def test_initial_vector():
    """Grid coordinates are placed on the plane axes, the third axis takes the fixed value"""
    config = _config(plane=['n3', 'n1'], fixed={'n2': 0.25})
    assert idflow.fields.initial_vector(config, 0.1, 0.2).tolist() == [0.2, 0.25, 0.1]


def test_idqs_at_time_zero(small_config):
    """At t = 0 the IDQS frame is the Bloch density, 1/8 at the center, mirror symmetric"""
    frame = idflow.fields.sample_field(small_config, 'idqs', 0.0)
    assert frame.shape == (11, 11)
    assert frame.axis_labels == ('n1', 'n3')
    assert frame.values[5, 5] == pytest.approx(0.125)
    assert frame.mask[0, 0] == MASK_BOUNDARY
    assert math.isnan(frame.values[0, 0])
    rows, cols = frame.shape
    for i in range(rows):
        for j in range(cols):
            assert frame.mask[i, j] == frame.mask[rows - 1 - i, j]
            if frame.mask[i, j] == MASK_NONE:
                assert frame.values[i, j] == frame.values[rows - 1 - i, j]
                n0 = idflow.fields.initial_vector(small_config, frame.axis1[i], frame.axis2[j])
                assert frame.values[i, j] == pytest.approx(idflow.qubit.bloch_idqs(n0))


def test_masks_are_sound(small_config, strong_model):
    """No unmasked cell has an evolved Bloch vector at or beyond the mask radius"""
    for t in (0.02, 0.5, 1.0):
        frame = idflow.fields.sample_field(small_config, 'idf', t)
        for i, a in enumerate(frame.axis1):
            for j, b in enumerate(frame.axis2):
                if frame.mask[i, j] != MASK_NONE:
                    continue
                n0 = idflow.fields.initial_vector(small_config, a, b)
                assert np.linalg.norm(n0) < 0.999
                assert idflow.qubit.bloch_motion(n0, strong_model, t).norm < 0.999
                assert math.isfinite(frame.values[i, j])


def test_early_idf_non_positive(small_config):
    """Before the first pole the IDF frame is non-positive and the RIDF mirror symmetric"""
    idf = idflow.fields.sample_field(small_config, 'idf', 0.1)
    assert np.all(idf.unmasked() <= 0)
    ridf = idflow.fields.sample_field(small_config, 'ridf', 0.1)
    unmasked = ridf.mask == MASK_NONE
    assert np.array_equal(ridf.values[unmasked], ridf.values[::-1][unmasked[::-1]])


def test_snapshot_at_pole_is_masked(strong_model):
    """Every cell of a frame taken at a zero of h carries the pole mask or the boundary mask"""
    pole = idflow.qubit.pole_times(strong_model, 1.0)[0]
    config = idflow.experiment.parse_config(json.dumps({'grid': {'resolution': 5}, 'times': {'snapshots': [pole]}}))
    frame = idflow.fields.sample_field(config, 'idqs', pole)
    assert set(frame.mask.ravel()) <= {MASK_POLE, MASK_BOUNDARY}
    assert MASK_POLE in set(frame.mask.ravel())


def test_gamma_field_is_uniform(small_config, strong_model):
    """The rate does not depend on the initial state"""
    frame = idflow.fields.sample_field(small_config, 'gamma', 0.3)
    assert frame.signed
    assert np.allclose(frame.unmasked(), idflow.qubit.gamma_rate(strong_model, 0.3))


def test_state_idqs_field(small_config, strong_model):
    """The state-space density at a cell is the Bloch density of its image"""
    frame = idflow.fields.sample_field(small_config, 'state_idqs', 0.3)
    i, j = 5, 7
    n0 = idflow.fields.initial_vector(small_config, frame.axis1[i], frame.axis2[j])
    expected = idflow.qubit.bloch_idqs(idflow.qubit.bloch_motion(n0, strong_model, 0.3))
    assert frame.values[i, j] == pytest.approx(expected)


def test_unknown_field(small_config):
    """Unknown field kinds are refused"""
    with pytest.raises(ValueError):
        idflow.fields.sample_field(small_config, 'entropy', 0.1)


def test_thread_count_does_not_change_frames(small_config):
    """Sampling with several threads gives the same frame as one thread"""
    single = idflow.fields.sample_field(small_config, 'idf', 0.5, threads=1)
    pooled = idflow.fields.sample_field(small_config, 'idf', 0.5, threads=4)
    assert np.array_equal(single.values, pooled.values, equal_nan=True)
    assert np.array_equal(single.mask, pooled.mask)


def test_custom_model_matches_closed_form():
    """A custom model with the Lorentzian rate reproduces the closed-form frame"""
    lorentzian = {'model': {'custom': {'channels': [
        {'jump_operator': [[[0, 0], [0, 0]], [[1, 0], [0, 0]]], 'rate': {'lorentzian': {'lambda': 1.0, 'W': 3.0}}}]}},
        'grid': {'resolution': 7}}
    custom = idflow.experiment.parse_config(json.dumps(lorentzian))
    analytic = idflow.experiment.parse_config(json.dumps({'grid': {'resolution': 7}}))
    for kind in ('idqs', 'idf', 'gamma'):
        numeric = idflow.fields.sample_field(custom, kind, 0.3)
        closed = idflow.fields.sample_field(analytic, kind, 0.3)
        assert np.array_equal(numeric.mask, closed.mask)
        assert np.allclose(numeric.unmasked(), closed.unmasked(), rtol=1e-6, atol=0)


def test_frame_round_trip(small_config):
    """Frames survive their dictionary form, masked cells included"""
    frame = idflow.fields.sample_field(small_config, 'idqs', 0.1)
    restored = idflow.fields.FieldFrame.from_dict(frame.to_dict())
    assert np.array_equal(restored.values, frame.values, equal_nan=True)
    assert np.array_equal(restored.mask, frame.mask)
    assert restored.axis_labels == frame.axis_labels
    assert frame.to_dict()['values'][0][0] is None

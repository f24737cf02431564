import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from poselift import rotations as rot

finite = st.floats(-10, 10, allow_nan=False)
vec3 = arrays(float, 3, elements=finite).filter(lambda v: np.linalg.norm(v) > 1e-3)


def test_identity_rotation_leaves_vectors():
    v = np.array([0.3, -1.2, 2.0])
    assert np.allclose(rot.rotate(rot.IDENTITY, v), v)


def test_quarter_turn_about_z():
    q = rot.from_axis_angle([0, 0, 1], math.pi / 2)
    assert np.allclose(rot.rotate(q, [1, 0, 0]), [0, 1, 0], atol=1e-15)


def test_multiply_composes_right_to_left():
    a = rot.from_axis_angle([0, 0, 1], math.pi / 2)
    b = rot.from_axis_angle([1, 0, 0], math.pi / 2)
    v = np.array([0.0, 1.0, 0.0])
    assert np.allclose(rot.rotate(rot.multiply(a, b), v), rot.rotate(a, rot.rotate(b, v)))


def test_matrix_round_trip(rng):
    q = rot.random(rng, 50)
    back = np.stack([rot.from_matrix(m) for m in rot.to_matrix(q)])
    same = np.minimum(np.abs(back - q).max(axis=1), np.abs(back + q).max(axis=1))
    assert same.max() < 1e-12


def test_from_matrix_rejects_reflections():
    with pytest.raises(ValueError):
        rot.from_matrix(np.diag([1.0, 1.0, -1.0]))


@given(vec3, vec3)
def test_shortest_arc_maps_a_onto_b(a, b):
    q = rot.shortest_arc(a, b)
    assert abs(np.linalg.norm(q) - 1) < 1e-12
    assert np.allclose(rot.rotate(q, a / np.linalg.norm(a)), b / np.linalg.norm(b), atol=1e-9)


@given(vec3, vec3)
def test_shortest_arc_axis_is_perpendicular_to_both(a, b):
    q = rot.shortest_arc(a, b)
    axis = q[1:]
    if np.linalg.norm(axis) > 1e-6 and np.linalg.norm(np.cross(a, b)) > 1e-6 * np.linalg.norm(a) * np.linalg.norm(b):
        assert abs(axis @ a) < 1e-9 * np.linalg.norm(a)
        assert abs(axis @ b) < 1e-9 * np.linalg.norm(b)


@pytest.mark.parametrize("a", [[1.0, 0, 0], [0, 1.0, 0], [0, 0, 1.0], [0.3, -0.4, 0.5]])
def test_shortest_arc_antiparallel_is_a_half_turn(a):
    a = np.asarray(a)
    q = rot.shortest_arc(a, -a)
    assert abs(q[0]) < 1e-15
    assert np.allclose(rot.rotate(q, a), -a, atol=1e-12)


def test_shortest_arc_broadcasts(rng):
    a = rng.normal(size=(7, 3))
    b = rng.normal(size=(7, 3))
    batched = rot.shortest_arc(a, b)
    single = np.stack([rot.shortest_arc(x, y) for x, y in zip(a, b)])
    assert np.array_equal(batched, single)

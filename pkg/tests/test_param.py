import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from loqcopt.linalg import is_unitary, top_singular
from loqcopt.param import ParamVector, apply_mask, random_start, to_matrix, zeros

TOFFOLI_FROZEN = {1, 3, 5}  # modes 2, 4, 6 in 1-based labels


def test_origin_is_identity():
    u = to_matrix(zeros("unitary", 5)).matrix
    assert np.array_equal(u, np.eye(5))


def test_single_rotation_generator():
    theta = 0.37
    x = ParamVector(np.array([0.0, 0.0, theta, 0.0]), "unitary", 2)
    expected = [[np.cos(theta), np.sin(theta)], [-np.sin(theta), np.cos(theta)]]
    np.testing.assert_allclose(to_matrix(x).matrix, expected, atol=1e-15)


def test_coordinate_counts():
    assert zeros("unitary", 6).coords.size == 36
    assert zeros("general", 6).coords.size == 72
    assert zeros("unitary", 9, TOFFOLI_FROZEN).coords.size == 36
    assert zeros("general", 9, TOFFOLI_FROZEN).coords.size == 72


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 7), st.integers(0, 2**31), st.sets(st.integers(0, 6), max_size=3))
def test_unitary_chart_always_unitary(n, seed, frozen):
    frozen = {m for m in frozen if m < n}
    x = random_start("unitary", n, frozen, seed)
    u = to_matrix(x).matrix
    assert is_unitary(u, 1e-10)
    for m in frozen:
        expected = np.zeros(n)
        expected[m] = 1.0
        assert np.array_equal(u[m], expected) and np.array_equal(u[:, m], expected)


def test_random_start_is_deterministic():
    a = random_start("unitary", 6, (), 42)
    b = random_start("unitary", 6, (), 42)
    assert np.array_equal(a.coords, b.coords)
    assert np.all(np.abs(a.coords) <= np.pi)


@pytest.mark.parametrize("frozen", [(), (1, 3, 5)])
def test_general_start_has_unit_top_singular_value(frozen):
    x = random_start("general", 9, frozen, 7)
    assert top_singular(to_matrix(x).matrix)[0] == pytest.approx(1.0, abs=1e-12)


def test_toffoli_mask_leaves_six_by_six_block():
    x = apply_mask(random_start("general", 9, (), 1), TOFFOLI_FROZEN)
    u = to_matrix(x).matrix
    free = [0, 2, 4, 6, 7, 8]
    for m in TOFFOLI_FROZEN:
        assert u[m, m] == 1.0
        assert np.count_nonzero(u[m]) == 1 and np.count_nonzero(u[:, m]) == 1
    assert np.count_nonzero(u[np.ix_(free, free)]) == 36


def test_mask_on_unitary_chart():
    x = random_start("unitary", 9, (), 5)
    masked = apply_mask(x, TOFFOLI_FROZEN)
    assert masked.coords.size == 36
    u = to_matrix(masked).matrix
    assert is_unitary(u)
    assert np.array_equal(u[1], np.eye(9)[1])


def test_empty_mask_is_noop_and_mask_is_idempotent():
    x = random_start("unitary", 4, (), 2)
    assert apply_mask(x, ()) is x
    once = apply_mask(x, {0, 2})
    twice = apply_mask(once, {0, 2})
    assert np.array_equal(once.coords, twice.coords) and once.frozen == twice.frozen


def test_all_modes_frozen_gives_identity():
    for chart in ("unitary", "general"):
        x = apply_mask(random_start(chart, 3, (), 0), {0, 1, 2})
        assert x.coords.size == 0
        assert np.array_equal(to_matrix(x).matrix, np.eye(3))


def test_bad_coordinates_rejected():
    with pytest.raises(ValueError):
        ParamVector(np.zeros(5), "unitary", 2)
    with pytest.raises(ValueError):
        zeros("polar", 2)

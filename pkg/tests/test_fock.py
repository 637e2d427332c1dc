from math import comb

import pytest
from hypothesis import given
from hypothesis import strategies as st

from loqcopt.fock import (
    FockBasis,
    computational_basis,
    dual_rail_encode,
    enumerate_fock,
    fock_dim,
)


def count_states(photons, modes):
    """Recursive brute-force count: photons placed in the first mode, rest recurse."""
    if modes == 1:
        return 1
    return sum(count_states(photons - k, modes - 1) for k in range(photons + 1))


@pytest.mark.parametrize("photons", range(6))
@pytest.mark.parametrize("modes", range(1, 9))
def test_basis_size_matches_brute_force(photons, modes):
    basis = enumerate_fock(photons, modes)
    assert len(basis) == count_states(photons, modes) == comb(photons + modes - 1, photons)
    assert len(basis) == fock_dim(photons, modes)
    assert len(set(basis)) == len(basis)
    assert all(sum(s) == photons and len(s) == modes and min(s) >= 0 for s in basis)


def test_two_qubit_output_space_has_ten_states():
    assert len(enumerate_fock(2, 4)) == 10


def test_three_photons_six_modes():
    assert len(enumerate_fock(3, 6)) == 56


def test_vacuum():
    assert enumerate_fock(0, 3).states == ((0, 0, 0),)


def test_order_is_lexicographic_descending():
    states = enumerate_fock(3, 4).states
    assert list(states) == sorted(states, reverse=True)
    assert enumerate_fock(2, 2).states == ((2, 0), (1, 1), (0, 2))


@given(st.integers(0, 4), st.integers(1, 5), st.data())
def test_index_round_trip(photons, modes, data):
    basis = enumerate_fock(photons, modes)
    i = data.draw(st.integers(0, len(basis) - 1))
    assert basis.index_of(basis.state_at(i)) == i


def test_duplicates_rejected():
    with pytest.raises(ValueError):
        FockBasis(((1, 0), (1, 0)))


def test_invalid_arguments():
    with pytest.raises(ValueError):
        enumerate_fock(2, 0)


@pytest.mark.parametrize(
    "bits, expected",
    [((0, 0), (1, 0, 1, 0)), ((0,), (1, 0)), ((1, 0, 1), (0, 1, 1, 0, 0, 1))],
)
def test_dual_rail_encode(bits, expected):
    assert dual_rail_encode(bits) == expected


def test_dual_rail_rejects_non_bits():
    with pytest.raises(ValueError):
        dual_rail_encode((0, 2))


def test_computational_basis():
    assert computational_basis(1) == [(1, 0), (0, 1)]
    assert computational_basis(2) == [(1, 0, 1, 0), (1, 0, 0, 1), (0, 1, 1, 0), (0, 1, 0, 1)]
    three = computational_basis(3)
    assert len(three) == 8
    assert three[0] == (1, 0, 1, 0, 1, 0)
    assert three[-1] == (0, 1, 0, 1, 0, 1)


@given(st.lists(st.integers(0, 1), min_size=1, max_size=4))
def test_encoded_states_live_in_the_fock_basis(bits):
    assert dual_rail_encode(bits) in enumerate_fock(len(bits), 2 * len(bits))

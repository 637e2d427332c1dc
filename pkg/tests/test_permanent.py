import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from loqcopt.errors import ConservationError, DimensionError, SizeGuardError
from loqcopt.permanent import (
    batch_permanent,
    batch_permanent_grad,
    expand_submatrix,
    permanent,
    permanent_bruteforce,
)


def random_complex(rng, n, m=None):
    m = n if m is None else m
    return rng.normal(size=(n, m)) + 1j * rng.normal(size=(n, m))


def test_identity():
    assert permanent(np.eye(3)) == pytest.approx(1.0)


def test_all_ones():
    assert permanent(np.ones((2, 2))) == pytest.approx(2.0)
    # brute force gives 4! = 24
    assert permanent_bruteforce(np.ones((4, 4))) == pytest.approx(24.0)
    assert permanent(np.ones((4, 4))) == pytest.approx(24.0)


def test_empty_matrix_is_one():
    assert permanent(np.zeros((0, 0))) == 1.0


def test_small_closed_forms():
    a, b, c, d = 1.5 + 1j, -0.3, 2.0j, 0.7 - 0.2j
    assert permanent_bruteforce(np.array([[a, b], [c, d]])) == pytest.approx(a * d + b * c)
    assert permanent_bruteforce(np.array([[a]])) == pytest.approx(a)


def test_random_5x5_against_brute_force():
    m = random_complex(np.random.default_rng(5), 5)
    ref = permanent_bruteforce(m)
    assert abs(permanent(m) - ref) <= 1e-12 * abs(ref)


def test_gray_code_matches_oracle_on_1000_matrices():
    rng = np.random.default_rng(2024)
    for trial in range(1000):
        n = trial % 7
        m = random_complex(rng, n)
        ref = permanent_bruteforce(m)
        assert abs(permanent(m) - ref) <= 1e-12 * max(abs(ref), 1.0)


@pytest.mark.parametrize("n", range(7))
def test_batched_ryser_agrees(n):
    rng = np.random.default_rng(n)
    stack = np.stack([random_complex(rng, n) for _ in range(5)])
    np.testing.assert_allclose(batch_permanent(stack), [permanent(m) for m in stack], rtol=1e-12, atol=1e-12)


def test_batched_minors_are_row_column_deletions():
    rng = np.random.default_rng(11)
    m = random_complex(rng, 5)
    per, minors = batch_permanent_grad(m[None])
    assert per[0] == pytest.approx(permanent(m))
    for k in range(5):
        for l in range(5):
            ref = permanent(np.delete(np.delete(m, k, 0), l, 1))
            assert minors[0, k, l] == pytest.approx(ref, rel=1e-12)


def test_errors():
    with pytest.raises(DimensionError):
        permanent(np.ones((2, 3)))
    with pytest.raises(SizeGuardError):
        permanent(np.ones((17, 17)))
    with pytest.raises(SizeGuardError):
        permanent_bruteforce(np.ones((9, 9)))


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2**31), st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False))
def test_multilinear_in_rows(n, seed, c):
    rng = np.random.default_rng(seed)
    m = random_complex(rng, n)
    i = seed % n
    scaled = m.copy()
    scaled[i] *= c
    assert permanent(scaled) == pytest.approx(c * permanent(m), rel=1e-10, abs=1e-10)


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 6), st.integers(0, 2**31))
def test_invariant_under_row_and_column_swaps(n, seed):
    rng = np.random.default_rng(seed)
    m = random_complex(rng, n)
    rows, cols = rng.permutation(n), rng.permutation(n)
    assert permanent(m[rows][:, cols]) == pytest.approx(permanent(m), rel=1e-10)


def test_expand_submatrix_matches_eq3_layout():
    u = np.arange(36).reshape(6, 6)
    sub = expand_submatrix(u, (1, 0, 1, 0, 1, 1), (1, 0, 0, 1, 1, 1))
    np.testing.assert_array_equal(sub, u[np.ix_([0, 2, 4, 5], [0, 3, 4, 5])])


def test_expand_submatrix_identity_and_repetition():
    u = random_complex(np.random.default_rng(0), 3)
    np.testing.assert_array_equal(expand_submatrix(u, (1, 1, 1), (1, 1, 1)), u)
    v = np.array([[1, 2], [3, 4]])
    np.testing.assert_array_equal(expand_submatrix(v, (2, 0), (1, 1)), [[1, 2], [1, 2]])


def test_expand_submatrix_conservation():
    with pytest.raises(ConservationError):
        expand_submatrix(np.eye(2), (1, 0), (1, 1))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31))
def test_expanded_permanent_symmetric_under_transpose(seed):
    rng = np.random.default_rng(seed)
    u = random_complex(rng, 4)
    rows = tuple(rng.multinomial(3, [0.25] * 4))
    cols = tuple(rng.multinomial(3, [0.25] * 4))
    a = permanent(expand_submatrix(u, rows, cols))
    b = permanent(expand_submatrix(u.T, cols, rows))
    assert a == pytest.approx(b, rel=1e-12, abs=1e-12)

"""Matrix permanents.

``permanent`` is Ryser's inclusion-exclusion formula walked in Gray-code order,
so consecutive subsets differ by one column and the row sums are updated in
O(n) per step. ``batch_permanent`` evaluates the same formula for a stack of
small matrices at once and is what the transfer-matrix code uses; its
companion ``batch_permanent_grad`` returns all first minors (the derivative of
the permanent with respect to each entry).
"""

from __future__ import annotations

from functools import lru_cache
from itertools import permutations
from typing import Sequence

import numpy as np

from loqcopt.errors import ConservationError, DimensionError, SizeGuardError

MAX_PERMANENT_SIZE = 16
MAX_BRUTEFORCE_SIZE = 8


def _check_square(m: np.ndarray, limit: int) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"permanent needs a square matrix, got shape {m.shape}")
    if m.shape[0] > limit:
        raise SizeGuardError(f"matrix size {m.shape[0]} exceeds limit {limit}")
    return m


def permanent(m: np.ndarray) -> complex:
    """Permanent of a square matrix via Gray-code Ryser, O(2^n n).

    Args:
        m: square array, size at most 16

    Returns:
        per(m); the permanent of the empty matrix is 1
    """
    m = _check_square(m, MAX_PERMANENT_SIZE)
    n = m.shape[0]
    if n == 0:
        return 1.0 + 0.0j
    rowsums = np.zeros(n, dtype=complex)
    in_set = np.zeros(n, dtype=bool)
    total = 0.0 + 0.0j
    sign = 1
    for k in range(1, 2**n):
        j = (k & -k).bit_length() - 1
        if in_set[j]:
            rowsums -= m[:, j]
        else:
            rowsums += m[:, j]
        in_set[j] = not in_set[j]
        sign = -sign
        total += sign * np.prod(rowsums)
    # sign tracks (-1)^|S|; Ryser carries an overall (-1)^n
    return complex(total * (-1) ** n)


def permanent_bruteforce(m: np.ndarray) -> complex:
    """Direct sum over all n! permutations; a test oracle for small n."""
    m = _check_square(m, MAX_BRUTEFORCE_SIZE)
    n = m.shape[0]
    rows = np.arange(n)
    return complex(sum(np.prod(m[rows, list(p)]) for p in permutations(range(n))))


def expand_submatrix(u: np.ndarray, row_mult: Sequence[int], col_mult: Sequence[int]) -> np.ndarray:
    """Repeat row ``i`` of ``u`` ``row_mult[i]`` times and column ``j`` ``col_mult[j]`` times.

    The permanent of the result, divided by ``sqrt(prod n_i! prod m_j!)``, is the
    Fock amplitude between occupation patterns ``row_mult`` and ``col_mult``.
    """
    u = np.asarray(u)
    if sum(row_mult) != sum(col_mult):
        raise ConservationError(
            f"row multiplicities carry {sum(row_mult)} photons, columns {sum(col_mult)}"
        )
    if len(row_mult) > u.shape[0] or len(col_mult) > u.shape[1]:
        raise DimensionError("multiplicity vector longer than matrix dimension")
    rows = occupation_to_indices(row_mult)
    cols = occupation_to_indices(col_mult)
    return u[np.ix_(rows, cols)]


def occupation_to_indices(occ: Sequence[int]) -> list[int]:
    """``(2, 0, 1)`` -> ``[0, 0, 2]``: mode index repeated once per photon."""
    return [i for i, n in enumerate(occ) for _ in range(int(n))]


@lru_cache(maxsize=None)
def ryser_tables(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Subset indicator matrix (2^n, n) and Ryser signs (-1)^(n - |S|)."""
    idx = np.arange(2**n)
    masks = ((idx[:, None] >> np.arange(n)[None, :]) & 1).astype(float)
    signs = (-1.0) ** (n - masks.sum(axis=1))
    masks.setflags(write=False)
    signs.setflags(write=False)
    return masks, signs


def batch_permanent(mats: np.ndarray) -> np.ndarray:
    """Permanents of a stack of n x n matrices, shape (..., n, n) -> (...)."""
    n = mats.shape[-1]
    masks, signs = ryser_tables(n)
    rowsums = mats @ masks.T
    return rowsums.prod(axis=-2) @ signs


def batch_permanent_grad(mats: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Permanents and their entrywise derivatives for a stack of matrices.

    Returns:
        ``(per, minors)`` where ``minors[..., k, l]`` is the permanent of the
        matrix with row ``k`` and column ``l`` deleted.
    """
    n = mats.shape[-1]
    masks, signs = ryser_tables(n)
    rowsums = mats @ masks.T  # (..., n, 2^n)
    per = rowsums.prod(axis=-2) @ signs
    if n == 0:
        return per, np.zeros(mats.shape, dtype=complex)
    # leave-one-out products over rows without division
    ones = np.ones(rowsums.shape[:-2] + (1,) + rowsums.shape[-1:], dtype=rowsums.dtype)
    prefix = np.concatenate([ones, np.cumprod(rowsums[..., :-1, :], axis=-2)], axis=-2)
    suffix = np.concatenate(
        [np.cumprod(rowsums[..., :0:-1, :], axis=-2)[..., ::-1, :], ones], axis=-2
    )
    loo = prefix * suffix
    minors = loo @ (signs[:, None] * masks)
    return per, minors

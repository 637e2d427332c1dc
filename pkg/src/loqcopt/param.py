"""Coordinates on interferometer matrices.

Two charts are supported:

``unitary``
    ``U = exp(sum_j x_j H_j)`` with the anti-Hermitian basis ordered as the N
    diagonal generators ``i E_kk``, then ``E_kl - E_lk`` for ``k < l``, then
    ``i (E_kl + E_lk)`` for ``k < l``.
``general``
    arbitrary complex ``W``; the coordinates are the real parts of the free
    entries (row-major) followed by their imaginary parts.

Frozen modes (0-based indices here) are held at ``U_ij = U_ji = delta_ij`` by
dropping every coordinate that touches them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterable

import numpy as np

from loqcopt.linalg import AntiHermitianExp, top_singular

CHARTS = ("unitary", "general")


class Layout:
    """Index tables for one (chart, size, frozen set); shared by all vectors using it."""

    def __init__(self, chart: str, n_modes: int, frozen: frozenset[int]) -> None:
        if chart not in CHARTS:
            raise ValueError(f"unknown chart {chart!r}; expected one of {CHARTS}")
        if any(m < 0 or m >= n_modes for m in frozen):
            raise ValueError(f"frozen modes {sorted(frozen)} out of range for {n_modes} modes")
        self.chart = chart
        self.n_modes = n_modes
        self.frozen = frozen
        free = [m for m in range(n_modes) if m not in frozen]
        self.free_modes = np.array(free, dtype=np.intp)
        if chart == "unitary":
            self.diag = self.free_modes
            pairs = [(k, l) for i, k in enumerate(free) for l in free[i + 1 :]]
            self.pk = np.array([p[0] for p in pairs], dtype=np.intp)
            self.pl = np.array([p[1] for p in pairs], dtype=np.intp)
            self.dim = len(free) + 2 * len(pairs)
        else:
            self.rows = np.repeat(self.free_modes, len(free))
            self.cols = np.tile(self.free_modes, len(free))
            self.dim = 2 * len(free) ** 2

    def _split(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        nd, npair = len(self.diag), len(self.pk)
        return x[:nd], x[nd : nd + npair], x[nd + npair :]

    def generator_sum(self, x: np.ndarray) -> np.ndarray:
        """Anti-Hermitian ``sum_j x_j H_j`` (unitary chart only)."""
        d, asym, sym = self._split(x)
        k = np.zeros((self.n_modes, self.n_modes), dtype=complex)
        k[self.diag, self.diag] = 1j * d
        k[self.pk, self.pl] = asym + 1j * sym
        k[self.pl, self.pk] = -asym + 1j * sym
        return k

    def matrix(self, x: np.ndarray) -> np.ndarray:
        return self.matrix_and_pullback(x)[0]

    def matrix_and_pullback(self, x: np.ndarray) -> tuple[np.ndarray, Callable[[np.ndarray], np.ndarray]]:
        """Matrix at ``x`` and a map from ``G`` (``df = 2 Re sum(G * dU)``) to ``df/dx``."""
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise ValueError(f"expected {self.dim} coordinates, got shape {x.shape}")
        if self.chart == "unitary":
            ex = AntiHermitianExp(self.generator_sum(x))
            u = ex.value
            for m in self.frozen:
                # exact identity rows/columns; exp leaves them so up to roundoff
                u[m, :] = 0.0
                u[:, m] = 0.0
                u[m, m] = 1.0

            def pullback(g: np.ndarray) -> np.ndarray:
                c = ex.pullback(g)
                pk, pl = self.pk, self.pl
                return np.concatenate(
                    [
                        -2.0 * c[self.diag, self.diag].imag,
                        2.0 * (c[pk, pl] - c[pl, pk]).real,
                        -2.0 * (c[pk, pl] + c[pl, pk]).imag,
                    ]
                )

            return u, pullback

        w = np.eye(self.n_modes, dtype=complex)
        half = self.dim // 2
        w[self.rows, self.cols] = x[:half] + 1j * x[half:]

        def pullback(g: np.ndarray) -> np.ndarray:
            gs = g[self.rows, self.cols]
            return np.concatenate([2.0 * gs.real, -2.0 * gs.imag])

        return w, pullback

    def generators(self) -> np.ndarray:
        """Stack of basis directions ``dU/dx_j`` at the chart origin, shape (dim, N, N)."""
        n = self.n_modes
        if self.chart == "unitary":
            out = np.zeros((self.dim, n, n), dtype=complex)
            nd, npair = len(self.diag), len(self.pk)
            j = np.arange(nd)
            out[j, self.diag, self.diag] = 1j
            j = nd + np.arange(npair)
            out[j, self.pk, self.pl] = 1.0
            out[j, self.pl, self.pk] = -1.0
            j = nd + npair + np.arange(npair)
            out[j, self.pk, self.pl] = 1j
            out[j, self.pl, self.pk] = 1j
            return out
        half = self.dim // 2
        out = np.zeros((self.dim, n, n), dtype=complex)
        out[np.arange(half), self.rows, self.cols] = 1.0
        out[half + np.arange(half), self.rows, self.cols] = 1j
        return out

    def matrix_and_tangents(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Matrix at ``x`` and all partial derivatives ``dU/dx_j``, shape (dim, N, N)."""
        x = np.asarray(x, dtype=float)
        if self.chart == "general":
            return self.matrix(x), self.generators()
        ex = AntiHermitianExp(self.generator_sum(x))
        u = ex.value
        for m in self.frozen:
            u[m, :] = 0.0
            u[:, m] = 0.0
            u[m, m] = 1.0
        return u, ex.directional(self.generators())

    def coords_of(self, w: np.ndarray) -> np.ndarray:
        """Inverse of ``matrix`` for the general chart."""
        if self.chart != "general":
            raise ValueError("explicit coordinates of a matrix exist only for the general chart")
        entries = np.asarray(w)[self.rows, self.cols]
        return np.concatenate([entries.real, entries.imag])


@lru_cache(maxsize=None)
def get_layout(chart: str, n_modes: int, frozen: frozenset[int]) -> Layout:
    return Layout(chart, n_modes, frozen)


@dataclass(frozen=True)
class ParamVector:
    """Point in a chart: coordinates plus the metadata needed to read them."""

    coords: np.ndarray
    chart: str
    n_modes: int
    frozen: frozenset[int] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        coords = np.array(self.coords, dtype=float)
        object.__setattr__(self, "frozen", frozenset(int(m) for m in self.frozen))
        if coords.shape != (self.layout.dim,):
            raise ValueError(
                f"{self.chart} chart on {self.n_modes} modes with {len(self.frozen)} frozen "
                f"needs {self.layout.dim} coordinates, got {coords.shape}"
            )
        coords.setflags(write=False)
        object.__setattr__(self, "coords", coords)

    @property
    def layout(self) -> Layout:
        return get_layout(self.chart, self.n_modes, self.frozen)

    def with_coords(self, coords: np.ndarray) -> "ParamVector":
        return ParamVector(np.asarray(coords, dtype=float), self.chart, self.n_modes, self.frozen)


@dataclass(frozen=True)
class Interferometer:
    """An N x N device matrix and the chart it came from."""

    matrix: np.ndarray
    chart: str = "general"

    @property
    def n_modes(self) -> int:
        return self.matrix.shape[0]


def to_matrix(x: ParamVector) -> Interferometer:
    return Interferometer(x.layout.matrix(x.coords), x.chart)


def zeros(chart: str, n_modes: int, frozen: Iterable[int] = ()) -> ParamVector:
    """Chart origin: identity for ``unitary``, the zero matrix (outside the mask) for ``general``."""
    layout = get_layout(chart, n_modes, frozenset(frozen))
    return ParamVector(np.zeros(layout.dim), chart, n_modes, layout.frozen)


def random_start(
    chart: str,
    n_modes: int,
    frozen: Iterable[int] = (),
    rng_seed: int | np.random.Generator | np.random.SeedSequence | None = None,
) -> ParamVector:
    """Random starting point.

    Unitary chart: coordinates i.i.d. uniform in [-pi, pi]. General chart: free
    entries with real and imaginary parts uniform in [-1, 1], rescaled so the
    largest singular value of the matrix is 1.
    """
    rng = np.random.default_rng(rng_seed)
    layout = get_layout(chart, n_modes, frozenset(frozen))
    if chart == "unitary":
        return ParamVector(rng.uniform(-np.pi, np.pi, layout.dim), chart, n_modes, layout.frozen)
    raw = rng.uniform(-1.0, 1.0, layout.dim)
    half = layout.dim // 2
    if half == 0:
        return ParamVector(raw, chart, n_modes, layout.frozen)
    k = len(layout.free_modes)
    block = (raw[:half] + 1j * raw[half:]).reshape(k, k)
    sigma = top_singular(block)[0]
    # frozen identity already has unit singular values, so scaling the free block suffices
    return ParamVector(raw / sigma, chart, n_modes, layout.frozen)


def apply_mask(x: ParamVector, frozen_modes: Iterable[int]) -> ParamVector:
    """Freeze more modes, dropping every coordinate that touches them."""
    new_frozen = x.frozen | frozenset(int(m) for m in frozen_modes)
    if new_frozen == x.frozen:
        return x
    old = x.layout
    new = get_layout(x.chart, x.n_modes, new_frozen)
    if x.chart == "general":
        w = old.matrix(x.coords)
        for m in new_frozen:
            w[m, :] = 0.0
            w[:, m] = 0.0
            w[m, m] = 1.0
        coords = new.coords_of(w)
    else:
        keep_d = np.isin(old.diag, new.diag)
        keep_p = ~(np.isin(old.pk, list(new_frozen)) | np.isin(old.pl, list(new_frozen)))
        d, asym, sym = old._split(x.coords)
        coords = np.concatenate([d[keep_d], asym[keep_p], sym[keep_p]])
    return ParamVector(coords, x.chart, x.n_modes, new_frozen)

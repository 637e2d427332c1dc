"""Post-selected transfer matrices of a linear-optical interferometer.

Convention: the interferometer maps input creation operators as
``a_i^dagger -> sum_j U[i, j] b_j^dagger``, so rows of ``U`` are input modes and
columns are output modes. The amplitude from input occupation ``n`` to output
occupation ``m`` is ``per(U[n-rows, m-cols]) / sqrt(prod n_i! prod m_j!)``.
Under this convention ``full_omega(U1 @ U2) == full_omega(U2) @ full_omega(U1)``.

Modes are laid out as ``[computational | ancilla | vacuum]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from math import factorial, prod, sqrt
from typing import Callable, Sequence

import numpy as np

from loqcopt.errors import ConservationError, DimensionError
from loqcopt.fock import FockState, as_fock_state, enumerate_fock
from loqcopt.linalg import is_unitary
from loqcopt.permanent import batch_permanent_grad, occupation_to_indices, permanent


@dataclass(frozen=True)
class ModeConfig:
    """Mode and photon bookkeeping for one device layout.

    Attributes:
        n_comp_modes: number of computational modes
        ancilla_input: photons injected into each ancilla mode
        n_vacuum_modes: extra modes entering empty
        measurement: photocount pattern required on ancilla + vacuum modes; defaults
            to ``ancilla_input`` followed by zeros
        comp_photons: photons in the computational register, or ``None`` when the
            inputs span several photon-number sectors (NS-type gates)
    """

    n_comp_modes: int
    ancilla_input: tuple[int, ...]
    n_vacuum_modes: int = 0
    measurement: tuple[int, ...] | None = None
    comp_photons: int | None = None

    def __post_init__(self) -> None:
        anc = as_fock_state(self.ancilla_input)
        object.__setattr__(self, "ancilla_input", anc)
        if self.n_comp_modes < 1:
            raise ValueError("n_comp_modes must be positive")
        if self.n_vacuum_modes < 0:
            raise ValueError("n_vacuum_modes must be non-negative")
        if self.measurement is None:
            meas = anc + (0,) * self.n_vacuum_modes
        else:
            meas = as_fock_state(self.measurement)
        if len(meas) != len(anc) + self.n_vacuum_modes:
            raise DimensionError(
                f"measurement pattern covers {len(meas)} modes, expected "
                f"{len(anc) + self.n_vacuum_modes} ancilla+vacuum modes"
            )
        if sum(meas) != sum(anc):
            raise ConservationError(
                f"measurement detects {sum(meas)} photons but ancillas carry {sum(anc)}"
            )
        object.__setattr__(self, "measurement", meas)
        if self.comp_photons is not None and self.comp_photons < 1:
            raise ValueError("comp_photons must be positive")

    @property
    def n_ancilla_modes(self) -> int:
        return len(self.ancilla_input)

    @property
    def ancilla_photons(self) -> int:
        return sum(self.ancilla_input)

    @property
    def n_modes(self) -> int:
        return self.n_comp_modes + self.n_ancilla_modes + self.n_vacuum_modes

    def full_input(self, comp_state: Sequence[int]) -> FockState:
        return tuple(comp_state) + self.ancilla_input + (0,) * self.n_vacuum_modes

    def full_output(self, comp_state: Sequence[int]) -> FockState:
        return tuple(comp_state) + self.measurement


def output_basis(in_basis: Sequence[FockState], n_comp_modes: int) -> list[FockState]:
    """Computational output states reachable from ``in_basis``.

    One Fock sector per distinct input photon number, sectors in ascending order.
    """
    sectors = sorted({sum(s) for s in in_basis})
    out: list[FockState] = []
    for n in sectors:
        out.extend(enumerate_fock(n, n_comp_modes).states)
    return out


@dataclass(frozen=True)
class TransferMatrix:
    """Post-selected map from computational inputs to computational outputs.

    ``entries[i, j]`` is the amplitude for ``in_basis[j] -> out_basis[i]`` given the
    measurement outcome.
    """

    out_basis: tuple[FockState, ...]
    in_basis: tuple[FockState, ...]
    entries: np.ndarray

    def __post_init__(self) -> None:
        if self.entries.shape != (len(self.out_basis), len(self.in_basis)):
            raise DimensionError(
                f"entries shape {self.entries.shape} does not match bases "
                f"({len(self.out_basis)}, {len(self.in_basis)})"
            )


@dataclass(frozen=True)
class _Sector:
    out_idx: np.ndarray
    in_idx: np.ndarray
    rows: np.ndarray  # (pairs, P) input mode per photon
    cols: np.ndarray  # (pairs, P) output mode per photon
    inv_norm: np.ndarray
    flat: np.ndarray = field(repr=False)  # (pairs, P, P) index into U.ravel()


class TransferPlan:
    """Precomputed index tables for repeated evaluation of ``A(U)``.

    Built once per (layout, input basis); ``matrix`` and ``matrix_and_vjp`` then
    cost one batched Ryser pass per photon-number sector.
    """

    def __init__(
        self,
        cfg: ModeConfig,
        in_basis: Sequence[Sequence[int]],
        out_basis: Sequence[Sequence[int]] | None = None,
    ) -> None:
        in_basis = [as_fock_state(s) for s in in_basis]
        for s in in_basis:
            if len(s) != cfg.n_comp_modes:
                raise DimensionError(f"input state {s} is not over {cfg.n_comp_modes} modes")
            if cfg.comp_photons is not None and sum(s) != cfg.comp_photons:
                raise ConservationError(
                    f"input state {s} carries {sum(s)} photons, config expects {cfg.comp_photons}"
                )
        if out_basis is None:
            out_basis = output_basis(in_basis, cfg.n_comp_modes)
        out_basis = [as_fock_state(s) for s in out_basis]
        self.cfg = cfg
        self.in_basis = tuple(in_basis)
        self.out_basis = tuple(out_basis)
        self.n_modes = cfg.n_modes
        self.shape = (len(out_basis), len(in_basis))
        self.degrees = np.array([sum(s) + cfg.ancilla_photons for s in in_basis])

        n = self.n_modes
        groups: dict[int, list[tuple[int, int]]] = {}
        for j, s_in in enumerate(in_basis):
            for i, s_out in enumerate(out_basis):
                if sum(s_in) == sum(s_out):
                    groups.setdefault(sum(s_in) + cfg.ancilla_photons, []).append((i, j))
        self._sectors = []
        for photons, pairs in sorted(groups.items()):
            oi = np.array([p[0] for p in pairs], dtype=np.intp)
            ij = np.array([p[1] for p in pairs], dtype=np.intp)
            rows = np.array(
                [occupation_to_indices(cfg.full_input(in_basis[j])) for j in ij], dtype=np.intp
            ).reshape(len(pairs), photons)
            cols = np.array(
                [occupation_to_indices(cfg.full_output(out_basis[i])) for i in oi], dtype=np.intp
            ).reshape(len(pairs), photons)
            inv_norm = np.array(
                [
                    1.0 / sqrt(_fact_prod(cfg.full_input(in_basis[j])) * _fact_prod(cfg.full_output(out_basis[i])))
                    for i, j in pairs
                ]
            )
            flat = rows[:, :, None] * n + cols[:, None, :]
            self._sectors.append(_Sector(oi, ij, rows, cols, inv_norm, flat))

    def _check(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=complex)
        if u.shape != (self.n_modes, self.n_modes):
            raise DimensionError(f"interferometer is {u.shape}, layout needs {self.n_modes} modes")
        return u

    def matrix(self, u: np.ndarray) -> np.ndarray:
        return self.matrix_and_vjp(u)[0]

    def matrix_and_vjp(self, u: np.ndarray) -> tuple[np.ndarray, Callable[[np.ndarray], np.ndarray]]:
        """Evaluate ``A(U)`` and return a pullback for cotangents.

        The pullback maps ``cot`` (shape of ``A``) to ``G[a, b] = sum cot * dA/dU[a, b]``.
        ``A`` is holomorphic in ``U``, so for a real function ``f`` with
        ``df = 2 Re sum(conj(df/dconj(A)) * dA)`` one passes ``cot = conj(df/dconj(A))``
        and gets ``df = 2 Re sum(G * dU)``.
        """
        u = self._check(u)
        a = np.zeros(self.shape, dtype=complex)
        cache = []
        for sec in self._sectors:
            mats = u.ravel()[sec.flat]
            per, minors = batch_permanent_grad(mats)
            a[sec.out_idx, sec.in_idx] = per * sec.inv_norm
            cache.append(minors)
        nn = self.n_modes * self.n_modes

        def vjp(cot: np.ndarray) -> np.ndarray:
            g = np.zeros(nn, dtype=complex)
            for sec, minors in zip(self._sectors, cache):
                coef = cot[sec.out_idx, sec.in_idx] * sec.inv_norm
                w = (minors * coef[:, None, None]).ravel()
                idx = sec.flat.ravel()
                g += np.bincount(idx, weights=w.real, minlength=nn)
                g += 1j * np.bincount(idx, weights=w.imag, minlength=nn)
            return g.reshape(self.n_modes, self.n_modes)

        return a, vjp


    def matrix_and_jacobian(self, u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """``A(U)`` and the dense holomorphic Jacobian ``dA[o, c] / dU[a, b]``.

        The Jacobian has shape ``(n_out, n_in, N, N)``.
        """
        u = self._check(u)
        n_out, n_in = self.shape
        nn = self.n_modes * self.n_modes
        a = np.zeros(self.shape, dtype=complex)
        jac = np.zeros(n_out * n_in * nn, dtype=complex)
        for sec in self._sectors:
            per, minors = batch_permanent_grad(u.ravel()[sec.flat])
            a[sec.out_idx, sec.in_idx] = per * sec.inv_norm
            w = (minors * sec.inv_norm[:, None, None]).ravel()
            pair = sec.out_idx * n_in + sec.in_idx
            idx = (pair[:, None, None] * nn + sec.flat).ravel()
            jac += np.bincount(idx, weights=w.real, minlength=jac.size)
            jac += 1j * np.bincount(idx, weights=w.imag, minlength=jac.size)
        return a, jac.reshape(n_out, n_in, self.n_modes, self.n_modes)


def _fact_prod(occ: Sequence[int]) -> int:
    return prod(factorial(n) for n in occ)


@lru_cache(maxsize=64)
def _cached_plan(cfg: ModeConfig, in_basis: tuple[FockState, ...]) -> TransferPlan:
    return TransferPlan(cfg, in_basis)


def transfer_matrix(u: np.ndarray, cfg: ModeConfig, in_basis: Sequence[Sequence[int]]) -> TransferMatrix:
    """Post-selected transfer matrix ``A(U)`` for the given layout and inputs.

    Args:
        u: N x N interferometer matrix (unitary or not)
        cfg: mode layout, ancilla input and measurement pattern
        in_basis: computational input states over ``cfg.n_comp_modes`` modes

    Returns:
        TransferMatrix over the output Fock sectors reachable from ``in_basis``
    """
    plan = _cached_plan(cfg, tuple(as_fock_state(s) for s in in_basis))
    return TransferMatrix(plan.out_basis, plan.in_basis, plan.matrix(u))


def full_omega(u: np.ndarray, photons: int, check_unitary: bool = True) -> np.ndarray:
    """Matrix of the induced map on ``photons``-photon Fock space.

    Rows and columns are indexed by ``enumerate_fock(photons, N)``. Only meant as a
    reference for testing ``transfer_matrix``.
    """
    u = np.asarray(u, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise DimensionError(f"interferometer must be square, got {u.shape}")
    if check_unitary and not is_unitary(u, tol=1e-10):
        raise ValueError("full_omega needs a unitary interferometer")
    basis = enumerate_fock(photons, u.shape[0])
    omega = np.empty((len(basis), len(basis)), dtype=complex)
    for j, s_in in enumerate(basis):
        rows = occupation_to_indices(s_in)
        for i, s_out in enumerate(basis):
            cols = occupation_to_indices(s_out)
            omega[i, j] = permanent(u[np.ix_(rows, cols)]) / sqrt(_fact_prod(s_in) * _fact_prod(s_out))
    return omega

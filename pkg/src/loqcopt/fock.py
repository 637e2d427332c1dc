"""Fock-basis enumeration and dual-rail qubit encoding.

A Fock state is stored as a plain tuple of non-negative photon counts, one entry
per optical mode. Bases are ordered lexicographically *descending*, so for two
photons in two modes the order is ``(2, 0), (1, 1), (0, 2)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from math import comb
from typing import Iterable, Iterator, Sequence

FockState = tuple[int, ...]


def as_fock_state(occupations: Iterable[int]) -> FockState:
    """Validate and freeze an occupation vector."""
    state = tuple(int(n) for n in occupations)
    if any(n < 0 for n in state):
        raise ValueError(f"negative photon number in Fock state {state}")
    return state


def fock_dim(photons: int, modes: int) -> int:
    """Number of ways to put ``photons`` identical bosons into ``modes`` modes."""
    return comb(photons + modes - 1, photons)


@dataclass(frozen=True)
class FockBasis:
    """Ordered collection of Fock states with an index lookup.

    Attributes:
        states: basis states in their fixed order
    """

    states: tuple[FockState, ...]
    _index: dict[FockState, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        index = {s: i for i, s in enumerate(self.states)}
        if len(index) != len(self.states):
            raise ValueError("duplicate states in Fock basis")
        if self.states:
            n_modes = len(self.states[0])
            if any(len(s) != n_modes for s in self.states):
                raise ValueError("Fock basis states must share one mode count")
        object.__setattr__(self, "_index", index)

    def __len__(self) -> int:
        return len(self.states)

    def __iter__(self) -> Iterator[FockState]:
        return iter(self.states)

    def __getitem__(self, i: int) -> FockState:
        return self.states[i]

    def __contains__(self, state: object) -> bool:
        return state in self._index

    def index_of(self, state: Sequence[int]) -> int:
        return self._index[tuple(state)]

    def state_at(self, i: int) -> FockState:
        return self.states[i]

    @property
    def n_modes(self) -> int:
        return len(self.states[0]) if self.states else 0


def _compositions(photons: int, modes: int) -> Iterator[FockState]:
    if modes == 1:
        yield (photons,)
        return
    for first in range(photons, -1, -1):
        for rest in _compositions(photons - first, modes - 1):
            yield (first,) + rest


@lru_cache(maxsize=None)
def enumerate_fock(photons: int, modes: int) -> FockBasis:
    """All Fock states of ``photons`` photons in ``modes`` modes.

    Args:
        photons: total photon number, ``>= 0``
        modes: number of modes, ``>= 1``

    Returns:
        basis of size ``C(photons + modes - 1, photons)``, lexicographically descending
    """
    if modes < 1:
        raise ValueError("need at least one mode")
    if photons < 0:
        raise ValueError("photon number must be non-negative")
    return FockBasis(tuple(_compositions(photons, modes)))


def dual_rail_encode(bits: Sequence[int]) -> FockState:
    """Encode logical bits in dual rail: 0 -> (1, 0) and 1 -> (0, 1) per mode pair."""
    state: list[int] = []
    for b in bits:
        if b not in (0, 1):
            raise ValueError(f"qubit value must be 0 or 1, got {b!r}")
        state.extend((1, 0) if b == 0 else (0, 1))
    return tuple(state)


def computational_basis(num_qubits: int) -> list[FockState]:
    """Dual-rail states of ``num_qubits`` qubits in binary counting order of the bitstring."""
    if num_qubits < 1:
        raise ValueError("need at least one qubit")
    out = []
    for k in range(2**num_qubits):
        bits = [(k >> (num_qubits - 1 - q)) & 1 for q in range(num_qubits)]
        out.append(dual_rail_encode(bits))
    return out

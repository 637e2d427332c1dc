"""Target gates as matrices on the computational output Fock space."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from loqcopt.errors import ConservationError, DimensionError
from loqcopt.fock import FockState, as_fock_state, computational_basis
from loqcopt.transfer import output_basis

HADAMARD = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2.0)


@dataclass(frozen=True)
class TargetGate:
    """A target map ``At`` from ``comp_basis`` into ``out_basis``.

    ``At`` is stored with ``Tr(At^dagger At) / Dc = 1``, so at perfect fidelity the
    success probability is ``|g|^2`` for ``A = g At``.
    """

    name: str
    comp_basis: tuple[FockState, ...]
    out_basis: tuple[FockState, ...]
    matrix: np.ndarray
    sectored: bool = False

    def __post_init__(self) -> None:
        m = np.array(self.matrix, dtype=complex)
        if m.shape != (len(self.out_basis), len(self.comp_basis)):
            raise DimensionError(
                f"gate matrix has shape {m.shape}, bases need "
                f"({len(self.out_basis)}, {len(self.comp_basis)})"
            )
        norm = np.vdot(m, m).real / len(self.comp_basis)
        if norm == 0.0:
            raise ValueError("target gate matrix is identically zero")
        m /= np.sqrt(norm)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        missing = [s for s in self.comp_basis if s not in set(self.out_basis)]
        if missing:
            raise ValueError(f"computational states {missing} absent from the output basis")
        photons = {sum(s) for s in self.comp_basis}
        if len(photons) > 1 and not self.sectored:
            raise ConservationError(
                f"basis mixes photon numbers {sorted(photons)}; set sectored=True for NS-type gates"
            )

    @property
    def dc(self) -> int:
        return len(self.comp_basis)

    @property
    def n_comp_modes(self) -> int:
        return len(self.comp_basis[0])

    @property
    def comp_photons(self) -> int | None:
        photons = {sum(s) for s in self.comp_basis}
        return photons.pop() if len(photons) == 1 else None

    def logical(self) -> np.ndarray:
        """Restriction of ``At`` to rows of the computational basis (Dc x Dc)."""
        rows = [self.out_basis.index(s) for s in self.comp_basis]
        return self.matrix[rows, :]


def from_logical(
    name: str,
    comp_basis: Sequence[Sequence[int]],
    logical: np.ndarray,
    sectored: bool = False,
) -> TargetGate:
    """Embed a Dc x Dc matrix on ``comp_basis`` into the full output Fock space."""
    comp = tuple(as_fock_state(s) for s in comp_basis)
    logical = np.asarray(logical, dtype=complex)
    if logical.shape != (len(comp), len(comp)):
        raise DimensionError(f"logical matrix must be {len(comp)}x{len(comp)}, got {logical.shape}")
    out = tuple(output_basis(comp, len(comp[0])))
    full = np.zeros((len(out), len(comp)), dtype=complex)
    rows = [out.index(s) for s in comp]
    full[rows, :] = logical
    return TargetGate(name, comp, out, full, sectored)


def make_ns() -> TargetGate:
    """Nonlinear sign gate on one mode: |2> picks up a minus sign."""
    return from_logical("ns", [(0,), (1,), (2,)], np.diag([1.0, 1.0, -1.0]), sectored=True)


def make_cs() -> TargetGate:
    """Two-qubit controlled sign, diag(1, 1, 1, -1) on dual-rail qubits."""
    return from_logical("cs", computational_basis(2), np.diag([1.0, 1.0, 1.0, -1.0]))


def make_cnot() -> TargetGate:
    """CNOT (first qubit controls), i.e. CS conjugated by a Hadamard on the second qubit."""
    h2 = np.kron(np.eye(2), HADAMARD)
    return from_logical("cnot", computational_basis(2), h2 @ np.diag([1.0, 1.0, 1.0, -1.0]) @ h2)


def make_toffoli_sign() -> TargetGate:
    """Toffoli in sign form: -1 on every logical state except |111>, which keeps +1."""
    diag = -np.ones(8)
    diag[-1] = 1.0
    return from_logical("toffoli", computational_basis(3), np.diag(diag))


BUILTIN_GATES: dict[str, Callable[[], TargetGate]] = {
    "ns": make_ns,
    "cs": make_cs,
    "cnot": make_cnot,
    "toffoli": make_toffoli_sign,
}


def get_gate(name: str) -> TargetGate:
    try:
        return BUILTIN_GATES[name.lower()]()
    except KeyError:
        raise KeyError(f"unknown gate {name!r}; built-ins are {sorted(BUILTIN_GATES)}") from None


def encode_complex(m: np.ndarray) -> list:
    """Nested ``[re, im]`` pairs for any-rank complex array."""
    m = np.asarray(m, dtype=complex)
    return np.stack([m.real, m.imag], axis=-1).tolist()


def decode_complex(data: Any) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    if arr.ndim < 1 or arr.shape[-1] != 2:
        raise ValueError("complex data must be nested [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def load_gate(document: Mapping[str, Any]) -> TargetGate:
    """Build a gate from a mapping.

    Keys: ``name``; ``comp_basis`` (list of occupation lists); exactly one of
    ``matrix`` (full output-space matrix, ``[re, im]`` pairs) or ``logical_matrix``
    (Dc x Dc); optional ``out_basis`` and ``sectored``.
    """
    try:
        name = str(document.get("name", "custom"))
        comp = [as_fock_state(s) for s in document["comp_basis"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed gate document: {exc}") from exc
    if not comp:
        raise ValueError("malformed gate document: empty comp_basis")
    sectored = bool(document.get("sectored", False))
    if "logical_matrix" in document:
        return from_logical(name, comp, decode_complex(document["logical_matrix"]), sectored)
    if "matrix" not in document:
        raise ValueError("malformed gate document: needs 'matrix' or 'logical_matrix'")
    if "out_basis" in document:
        out = tuple(as_fock_state(s) for s in document["out_basis"])
    else:
        out = tuple(output_basis(comp, len(comp[0])))
    return TargetGate(name, tuple(comp), out, decode_complex(document["matrix"]), sectored)


def dump_gate(gate: TargetGate) -> dict[str, Any]:
    return {
        "name": gate.name,
        "comp_basis": [list(s) for s in gate.comp_basis],
        "out_basis": [list(s) for s in gate.out_basis],
        "matrix": encode_complex(gate.matrix),
        "sectored": gate.sectored,
    }

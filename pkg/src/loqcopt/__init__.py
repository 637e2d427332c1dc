"""Numerical design of post-selected linear-optical quantum gates."""

from loqcopt.fock import FockBasis, computational_basis, dual_rail_encode, enumerate_fock
from loqcopt.gates import TargetGate, load_gate, make_cnot, make_cs, make_ns, make_toffoli_sign
from loqcopt.objectives import (
    ObjectiveValue,
    fidelity,
    scaled_success,
    success,
    success_bounds,
)
from loqcopt.optimize import OptimizeConfig, RunResult, manifold_dimension, sweep, verify
from loqcopt.param import Interferometer, ParamVector, apply_mask, random_start, to_matrix
from loqcopt.permanent import expand_submatrix, permanent, permanent_bruteforce
from loqcopt.transfer import ModeConfig, TransferMatrix, full_omega, transfer_matrix

__version__ = "0.1.0"

__all__ = [
    "FockBasis",
    "Interferometer",
    "ModeConfig",
    "ObjectiveValue",
    "OptimizeConfig",
    "ParamVector",
    "RunResult",
    "TargetGate",
    "TransferMatrix",
    "apply_mask",
    "computational_basis",
    "dual_rail_encode",
    "enumerate_fock",
    "expand_submatrix",
    "fidelity",
    "full_omega",
    "load_gate",
    "make_cnot",
    "make_cs",
    "make_ns",
    "make_toffoli_sign",
    "manifold_dimension",
    "permanent",
    "permanent_bruteforce",
    "random_start",
    "scaled_success",
    "success",
    "success_bounds",
    "sweep",
    "to_matrix",
    "transfer_matrix",
    "verify",
]

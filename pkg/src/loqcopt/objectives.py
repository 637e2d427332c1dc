"""Fidelity, success probability and their gradients.

All inner products are ``<A|B> = Tr(A^dagger B) / Dc``. Fidelity is projective:
``F = |<A|At>|^2 / (<A|A> <At|At>)``. Success is ``S = <A|A>``.

For non-unitary matrices the device is taken to be ``W / sigma_max(W)`` (it can
then be completed to a unitary with extra vacuum modes), and every quantity is
evaluated there. For a single photon-number sector this gives
``S(W) / sigma_max(W)^(2 P)`` with ``P`` the total photon number.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Literal, Sequence

import numpy as np

from loqcopt.errors import DimensionError, EvaluationError, UndefinedFidelityError
from loqcopt.gates import TargetGate
from loqcopt.linalg import top_singular
from loqcopt.param import ParamVector, get_layout
from loqcopt.transfer import ModeConfig, TransferMatrix, TransferPlan

ObjectiveName = Literal["fidelity", "success", "scaled_success"]

FD_STEP = 1e-6


@dataclass(frozen=True)
class ObjectiveValue:
    fidelity: float
    success: float

    @property
    def fubini_study(self) -> float:
        return fubini_study(self.fidelity)


def _entries(a: TransferMatrix | np.ndarray) -> np.ndarray:
    return a.entries if isinstance(a, TransferMatrix) else np.asarray(a, dtype=complex)


def _target(t: TargetGate | np.ndarray) -> np.ndarray:
    return t.matrix if isinstance(t, TargetGate) else np.asarray(t, dtype=complex)


def inner(a: np.ndarray, b: np.ndarray) -> complex:
    """``Tr(a^dagger b) / Dc`` with ``Dc`` the number of columns."""
    return complex(np.vdot(a, b)) / a.shape[1]


def fidelity(a: TransferMatrix | np.ndarray, t: TargetGate | np.ndarray) -> float:
    """Projective overlap of the realized map with the target.

    Raises:
        UndefinedFidelityError: if either operator has zero norm
    """
    a, t = _entries(a), _target(t)
    if a.shape != t.shape:
        raise DimensionError(f"transfer matrix {a.shape} and target {t.shape} differ in shape")
    qa, qt = inner(a, a).real, inner(t, t).real
    if qa == 0.0 or qt == 0.0:
        raise UndefinedFidelityError("fidelity is undefined for a zero operator")
    return abs(inner(a, t)) ** 2 / (qa * qt)


def fubini_study(f: float) -> float:
    """Fubini-Study angle ``arccos(sqrt(F))``."""
    return float(np.arccos(np.sqrt(np.clip(f, 0.0, 1.0))))


def success(a: TransferMatrix | np.ndarray) -> float:
    a = _entries(a)
    return inner(a, a).real


def success_bounds(a: TransferMatrix | np.ndarray) -> tuple[float, float]:
    """Extremes of ``<psi|A^dagger A|psi>`` over normalized inputs."""
    a = _entries(a)
    lam = np.linalg.eigvalsh(a.conj().T @ a)
    return float(max(lam[0], 0.0)), float(lam[-1])


def input_state_variance(
    a: TransferMatrix | np.ndarray, n_samples: int = 100, rng: np.random.Generator | int | None = 0
) -> float:
    """Variance of the per-input success probability over random normalized inputs."""
    a = _entries(a)
    rng = np.random.default_rng(rng)
    psi = rng.normal(size=(a.shape[1], n_samples)) + 1j * rng.normal(size=(a.shape[1], n_samples))
    psi /= np.linalg.norm(psi, axis=0)
    probs = np.sum(np.abs(a @ psi) ** 2, axis=0)
    return float(np.var(probs))


def scaled_success(w: np.ndarray, cfg: ModeConfig, t: TargetGate) -> float:
    """Success of the dilated device ``W / sigma_max(W)``."""
    w = np.asarray(w, dtype=complex)
    sigma = top_singular(w)[0]
    if sigma == 0.0:
        raise ValueError("scaled success is undefined for the zero matrix")
    plan = TransferPlan(cfg, t.comp_basis, t.out_basis)
    return success(plan.matrix(w / sigma))


class GateProblem:
    """Objectives of one (gate, layout, chart, mask) as functions of chart coordinates.

    In the general chart the matrix is normalized by its top singular value
    before the transfer matrix is built, so ``success`` there is the scaled success.
    """

    def __init__(
        self,
        gate: TargetGate,
        cfg: ModeConfig,
        chart: str = "unitary",
        frozen: Sequence[int] = (),
    ) -> None:
        if cfg.n_comp_modes != gate.n_comp_modes:
            raise DimensionError(
                f"gate acts on {gate.n_comp_modes} modes, layout has {cfg.n_comp_modes} computational modes"
            )
        self.gate = gate
        self.cfg = cfg
        self.chart = chart
        self.layout = get_layout(chart, cfg.n_modes, frozenset(frozen))
        self.plan = TransferPlan(cfg, gate.comp_basis, gate.out_basis)
        self.target = gate.matrix
        self.dc = gate.dc

    @property
    def dim(self) -> int:
        return self.layout.dim

    def point(self, coords: np.ndarray) -> ParamVector:
        return ParamVector(np.asarray(coords, dtype=float), self.chart, self.cfg.n_modes, self.layout.frozen)

    def device_matrix(self, coords: np.ndarray) -> np.ndarray:
        """Physical interferometer at ``coords`` (normalized in the general chart)."""
        w = self.layout.matrix(np.asarray(coords, dtype=float))
        if self.chart == "general":
            sigma = top_singular(w)[0]
            if sigma == 0.0:
                raise EvaluationError("vanishing interferometer matrix")
            w = w / sigma
        return w

    def transfer(self, coords: np.ndarray) -> np.ndarray:
        return self.plan.matrix(self.device_matrix(coords))

    def evaluate(self, coords: np.ndarray) -> ObjectiveValue:
        a = self.transfer(coords)
        f, s = self._fs(a)
        return ObjectiveValue(f, s)

    def _fs(self, a: np.ndarray) -> tuple[float, float]:
        q = inner(a, a).real
        if not np.isfinite(q):
            raise EvaluationError("non-finite transfer matrix")
        if q == 0.0:
            return 0.0, 0.0
        p = inner(self.target, a)
        return abs(p) ** 2 / q, q

    def value_and_grads(self, coords: np.ndarray) -> tuple[float, float, np.ndarray, np.ndarray]:
        """``(F, S, dF/dx, dS/dx)`` at ``coords`` with analytic gradients."""
        coords = np.asarray(coords, dtype=float)
        w, pull_chart = self.layout.matrix_and_pullback(coords)
        if self.chart == "general":
            sigma, left, right = top_singular(w)
            if sigma == 0.0:
                raise EvaluationError("vanishing interferometer matrix")
            u = w / sigma
        else:
            u = w
        a, vjp = self.plan.matrix_and_vjp(u)
        f, s = self._fs(a)
        if s == 0.0:
            z = np.zeros(self.dim)
            return 0.0, 0.0, z, z.copy()
        t, dc = self.target, self.dc
        p = inner(t, a)
        # Wirtinger derivatives d/d conj(A)
        gf = p * t / (dc * s) - f * a / (s * dc)
        gs = a / dc
        grads = []
        for g in (gf, gs):
            gu = vjp(np.conj(g))
            if self.chart == "general":
                c = np.sum(gu * w).real
                gu = gu / sigma - (c / sigma**2) * np.outer(left.conj(), right)
            grads.append(pull_chart(gu))
        if not (np.isfinite(f) and np.isfinite(s) and np.all(np.isfinite(grads[0])) and np.all(np.isfinite(grads[1]))):
            raise EvaluationError(f"non-finite objective at x (F={f}, S={s})")
        return f, s, grads[0], grads[1]

    def jacobian(self, coords: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Transfer matrix and its derivatives ``dA/dx_j``, shape (n_out, n_in, dim)."""
        w, tangents = self.layout.matrix_and_tangents(np.asarray(coords, dtype=float))
        if self.chart == "general":
            sigma, left, right = top_singular(w)
            if sigma == 0.0:
                raise EvaluationError("vanishing interferometer matrix")
            dsigma = np.einsum("a,jab,b->j", left.conj(), tangents, right).real
            tangents = tangents / sigma - w[None] * (dsigma / sigma**2)[:, None, None]
            w = w / sigma
        a, jac_u = self.plan.matrix_and_jacobian(w)
        return a, np.einsum("ocab,jab->ocj", jac_u, tangents)

    def fidelity_residual(self, coords: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Real residual ``r`` with ``|r|^2 = 1 - F`` and its Jacobian.

        ``r`` is the component of the normalized transfer matrix orthogonal to
        the target, scaled by ``1/sqrt(Dc)`` and split into real and imaginary parts.
        """
        a, da = self.jacobian(coords)
        t, dc = self.target, self.dc
        q = inner(a, a).real
        if q == 0.0:
            raise EvaluationError("transfer matrix vanishes; fidelity residual undefined")
        ahat = a / np.sqrt(q)
        re_dq = np.einsum("oc,ocj->j", a.conj(), da).real / dc
        dahat = da / np.sqrt(q) - a[:, :, None] * (re_dq / q**1.5)[None, None, :]
        r = ahat - inner(t, ahat) * t
        dr = dahat - np.einsum("oc,ocj->j", t.conj(), dahat)[None, None, :] * t[:, :, None] / dc
        scale = 1.0 / np.sqrt(dc)
        res = np.concatenate([r.real.ravel(), r.imag.ravel()]) * scale
        jac = np.concatenate([dr.real.reshape(-1, self.dim), dr.imag.reshape(-1, self.dim)]) * scale
        return res, jac

    def objective(self, name: ObjectiveName) -> Callable[[np.ndarray], float]:
        if name == "fidelity":
            return lambda x: self.evaluate(x).fidelity
        if name in ("success", "scaled_success"):
            if name == "scaled_success" and self.chart != "general":
                raise ValueError("scaled_success needs the general chart")
            return lambda x: self.evaluate(x).success
        raise ValueError(f"unknown objective {name!r}")


def finite_difference_gradient(func: Callable[[np.ndarray], float], x: np.ndarray, h: float = FD_STEP) -> np.ndarray:
    """Central differences, entrywise."""
    x = np.asarray(x, dtype=float)
    grad = np.empty_like(x)
    for i in range(len(x)):
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        grad[i] = (func(xp) - func(xm)) / (2.0 * h)
    if not np.all(np.isfinite(grad)):
        raise EvaluationError("non-finite finite-difference gradient")
    return grad


def gradient(
    objective: ObjectiveName,
    x: ParamVector | np.ndarray,
    problem: GateProblem,
    method: Literal["fd", "analytic"] = "fd",
    h: float = FD_STEP,
) -> np.ndarray:
    """Gradient of an objective with respect to chart coordinates.

    ``method="fd"`` uses central differences with step ``h``; ``"analytic"``
    differentiates through the permanents, the matrix exponential and the
    singular-value normalization.
    """
    coords = x.coords if isinstance(x, ParamVector) else np.asarray(x, dtype=float)
    if method == "fd":
        return finite_difference_gradient(problem.objective(objective), coords, h)
    if method != "analytic":
        raise ValueError(f"unknown gradient method {method!r}")
    if objective == "scaled_success" and problem.chart != "general":
        raise ValueError("scaled_success needs the general chart")
    _, _, df, ds = problem.value_and_grads(coords)
    return df if objective == "fidelity" else ds

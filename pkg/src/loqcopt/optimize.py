"""Two-stage gate design.

Stage 1 climbs the fidelity from a random start. Runs that end with
``|1 - F| < tol_fidelity`` sit on the perfect-fidelity set and go on to
Stage 2, which climbs the merit ``S - mu (1 - F)`` through an increasing
sequence of penalty weights and finally re-polishes ``F``. A sweep repeats this
from many seeded starts and clusters the final success values into plateaus.
"""

from __future__ import annotations

import logging
import os
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Callable, Iterable

import numpy as np
from scipy.optimize import OptimizeResult, minimize

from loqcopt.errors import DimensionError, EvaluationError
from loqcopt.gates import TargetGate
from loqcopt.linalg import AntiHermitianExp
from loqcopt.objectives import (
    GateProblem,
    finite_difference_gradient,
    fidelity,
    input_state_variance,
    success,
    success_bounds,
)
from loqcopt.param import ParamVector, random_start
from loqcopt.transfer import ModeConfig, TransferPlan

log = logging.getLogger(__name__)

THREADS_ENV = "LOQCOPT_WORKERS"
DEFAULT_PENALTIES = (1e1, 1e2, 1e3, 1e4)
PLATEAU_WIDTH = 1e-4


@dataclass(frozen=True)
class OptimizeConfig:
    """Everything a sweep needs; ``mask`` holds 0-based frozen mode indices."""

    gate: TargetGate
    cfg: ModeConfig
    chart: str = "unitary"
    mask: frozenset[int] = frozenset()
    restarts: int = 1
    seed: int = 0
    tol_fidelity: float = 1e-9
    tol_gradient: float = 1e-8
    max_iters: int = 5000
    penalty_weights: tuple[float, ...] = DEFAULT_PENALTIES
    gradient: str = "analytic"
    workers: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "mask", frozenset(int(m) for m in self.mask))
        object.__setattr__(self, "penalty_weights", tuple(float(m) for m in self.penalty_weights))
        if self.restarts < 1:
            raise ValueError("restarts must be at least 1")
        if self.tol_fidelity <= 0 or self.tol_gradient <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be positive")
        if list(self.penalty_weights) != sorted(self.penalty_weights) or not self.penalty_weights:
            raise ValueError("penalty_weights must be a non-empty ascending schedule")
        if self.gradient not in ("analytic", "fd"):
            raise ValueError(f"unknown gradient method {self.gradient!r}")
        if self.cfg.n_comp_modes != self.gate.n_comp_modes:
            raise DimensionError("gate and mode layout disagree on the number of computational modes")

    @cached_property
    def problem(self) -> GateProblem:
        return GateProblem(self.gate, self.cfg, self.chart, self.mask)


@dataclass
class RunResult:
    restart_id: int
    final_x: ParamVector
    final_U: np.ndarray
    fidelity: float
    success: float
    on_manifold: bool
    iterations: int
    wallclock: float
    message: str = ""
    merit_history: list[list[float]] = field(default_factory=list, repr=False)


@dataclass(frozen=True)
class Plateau:
    value: float
    low: float
    high: float
    count: int


@dataclass
class SweepResult:
    """Runs sorted by ascending success, plus plateau clusters of the on-manifold runs."""

    runs: list[RunResult]
    plateaus: list[Plateau]

    def __len__(self) -> int:
        return len(self.runs)

    def __iter__(self):
        return iter(self.runs)

    def __getitem__(self, i: int) -> RunResult:
        return self.runs[i]

    @property
    def best(self) -> RunResult | None:
        good = [r for r in self.runs if r.on_manifold]
        return max(good, key=lambda r: r.success) if good else None


def _fidelity_fn(problem: GateProblem, method: str) -> Callable[[np.ndarray], tuple[float, np.ndarray]]:
    if method == "fd":
        f = problem.objective("fidelity")
        return lambda x: (-f(x), -finite_difference_gradient(f, x))

    def fg(x: np.ndarray) -> tuple[float, np.ndarray]:
        fid, _, df, _ = problem.value_and_grads(x)
        return -fid, -df

    return fg


def _merit_fn(problem: GateProblem, mu: float, method: str) -> Callable[[np.ndarray], tuple[float, np.ndarray]]:
    if method == "fd":
        def merit(x: np.ndarray) -> float:
            v = problem.evaluate(x)
            return v.success - mu * (1.0 - v.fidelity)

        return lambda x: (-merit(x), -finite_difference_gradient(merit, x))

    def fg(x: np.ndarray) -> tuple[float, np.ndarray]:
        fid, s, df, ds = problem.value_and_grads(x)
        return -(s - mu * (1.0 - fid)), -(ds + mu * df)

    return fg


def _ascend(fg, x0: np.ndarray, gtol: float, maxiter: int, history: list[float] | None = None):
    """BFGS with a Wolfe line search on ``-objective``."""
    if x0.size == 0:
        # fully frozen device: nothing to move
        return OptimizeResult(x=x0, fun=fg(x0)[0], nit=0, message="no free coordinates")
    callback = None
    if history is not None:
        history.append(-fg(x0)[0])
        callback = lambda intermediate_result: history.append(-intermediate_result.fun)  # noqa: E731

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return minimize(
            fg, x0, jac=True, method="BFGS", callback=callback, options={"gtol": gtol, "maxiter": maxiter}
        )


def _result(
    problem: GateProblem, oc: OptimizeConfig, restart_id: int, x: np.ndarray, iterations: int, t0: float, message: str
) -> RunResult:
    v = problem.evaluate(x)
    final = problem.point(x)
    u = problem.device_matrix(x)
    if problem.chart == "general" and not problem.layout.frozen:
        # report coordinates of the normalized matrix
        final = problem.point(problem.layout.coords_of(u))
    return RunResult(
        restart_id=restart_id,
        final_x=final,
        final_U=u,
        fidelity=v.fidelity,
        success=v.success,
        on_manifold=abs(1.0 - v.fidelity) < oc.tol_fidelity,
        iterations=iterations,
        wallclock=time.perf_counter() - t0,
        message=message,
    )


def stage1_fidelity(x0: ParamVector, oc: OptimizeConfig, restart_id: int = 0) -> RunResult:
    """Local ascent of the fidelity from ``x0``."""
    problem = oc.problem
    _check_point(x0, oc)
    t0 = time.perf_counter()
    res = _ascend(_fidelity_fn(problem, oc.gradient), np.array(x0.coords), oc.tol_gradient, oc.max_iters)
    if not np.all(np.isfinite(res.x)) or not np.isfinite(res.fun):
        raise EvaluationError(f"restart {restart_id}: non-finite iterate in fidelity ascent ({res.message})")
    return _result(problem, oc, restart_id, res.x, int(res.nit), t0, f"stage1: {res.message}")


def stage2_success(r: RunResult, oc: OptimizeConfig, record_history: bool = False) -> RunResult:
    """Maximize success on the perfect-fidelity set, starting from an on-manifold run."""
    if not r.on_manifold:
        raise ValueError(f"restart {r.restart_id} is not on the F=1 manifold (F={r.fidelity})")
    problem = oc.problem
    t0 = time.perf_counter() - r.wallclock
    x = np.array(r.final_x.coords)
    iterations = r.iterations
    histories: list[list[float]] = []
    for mu in oc.penalty_weights:
        hist: list[float] | None = [] if record_history else None
        res = _ascend(_merit_fn(problem, mu, oc.gradient), x, oc.tol_gradient, oc.max_iters, hist)
        iterations += int(res.nit)
        if hist is not None:
            histories.append(hist)
        if not np.all(np.isfinite(res.x)):
            raise EvaluationError(f"restart {r.restart_id}: non-finite iterate at penalty {mu:g}")
        x = res.x
    # project back onto F = 1
    res = _ascend(_fidelity_fn(problem, oc.gradient), x, oc.tol_gradient * 1e-2, oc.max_iters)
    iterations += int(res.nit)
    out = _result(problem, oc, r.restart_id, res.x, iterations, t0, "stage2")
    if not out.on_manifold:
        out.message = f"stage2: manifold escape, |1-F|={abs(1.0 - out.fidelity):.3e}"
    out.merit_history = histories
    return out


def optimize_scaled(x0: ParamVector, oc: OptimizeConfig, restart_id: int = 0) -> RunResult:
    """Both stages in the general chart, where success is the scaled success."""
    if oc.chart != "general":
        raise ValueError("optimize_scaled needs the general chart")
    return run_restart(x0, oc, restart_id)


def run_restart(x0: ParamVector, oc: OptimizeConfig, restart_id: int = 0) -> RunResult:
    try:
        r = stage1_fidelity(x0, oc, restart_id)
        if r.on_manifold:
            r = stage2_success(r, oc)
        return r
    except EvaluationError as exc:
        log.warning("restart %d aborted: %s", restart_id, exc)
        problem = oc.problem
        return RunResult(
            restart_id, x0, problem.layout.matrix(x0.coords), float("nan"), float("nan"), False, 0, 0.0, f"aborted: {exc}"
        )


def _check_point(x: ParamVector, oc: OptimizeConfig) -> None:
    if x.chart != oc.chart or x.n_modes != oc.cfg.n_modes or x.frozen != oc.mask:
        raise ValueError("starting point does not match the chart, size or mask of the configuration")


def restart_seeds(seed: int, restarts: int) -> list[np.random.SeedSequence]:
    return np.random.SeedSequence(seed).spawn(restarts)


def _one(args: tuple[OptimizeConfig, int, np.random.SeedSequence]) -> RunResult:
    oc, i, ss = args
    x0 = random_start(oc.chart, oc.cfg.n_modes, oc.mask, ss)
    return run_restart(x0, oc, i)


def worker_count(oc: OptimizeConfig) -> int:
    if oc.workers is not None:
        return max(1, oc.workers)
    env = os.environ.get(THREADS_ENV)
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def sweep(oc: OptimizeConfig, progress: Callable[[RunResult], None] | None = None) -> SweepResult:
    """Independent two-stage runs from ``oc.restarts`` seeded random starts.

    Restart ``i`` draws its start from the ``i``-th child of ``SeedSequence(oc.seed)``,
    so results do not depend on the number of workers.

    Args:
        oc: Problem, chart, mask and optimizer settings.
        progress: Called with each finished run, in completion order.

    Returns:
        Runs sorted by ascending success (aborted runs first) and the plateau
        clusters of the on-manifold runs.
    """
    jobs = [(oc, i, ss) for i, ss in enumerate(restart_seeds(oc.seed, oc.restarts))]
    workers = min(worker_count(oc), len(jobs))
    runs: list[RunResult] = []
    if workers == 1:
        for job in jobs:
            runs.append(_one(job))
            if progress:
                progress(runs[-1])
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for r in pool.map(_one, jobs, chunksize=1):
                runs.append(r)
                if progress:
                    progress(r)
    runs.sort(key=lambda r: (np.nan_to_num(r.success, nan=-1.0), r.restart_id))
    return SweepResult(runs, find_plateaus([r.success for r in runs if r.on_manifold]))


def find_plateaus(values: Iterable[float], width: float = PLATEAU_WIDTH) -> list[Plateau]:
    """Group sorted values into clusters whose spread stays below ``width``."""
    vals = sorted(v for v in values if np.isfinite(v))
    clusters: list[list[float]] = []
    for v in vals:
        if clusters and v - clusters[-1][0] < width:
            clusters[-1].append(v)
        else:
            clusters.append([v])
    return [Plateau(float(np.mean(c)), c[0], c[-1], len(c)) for c in clusters]


def _hessian(func: Callable[[np.ndarray], float], n: int, h: float) -> np.ndarray:
    zero = np.zeros(n)
    f0 = func(zero)
    hess = np.empty((n, n))
    e = np.eye(n) * h
    fp = np.array([func(e[i]) for i in range(n)])
    fm = np.array([func(-e[i]) for i in range(n)])
    for i in range(n):
        hess[i, i] = (fp[i] - 2.0 * f0 + fm[i]) / h**2
        for j in range(i + 1, n):
            val = (func(e[i] + e[j]) - func(e[i] - e[j]) - func(-e[i] + e[j]) + func(-e[i] - e[j])) / (4.0 * h**2)
            hess[i, j] = hess[j, i] = val
    return hess


def fidelity_hessian(r: RunResult, oc: OptimizeConfig, h: float = 1e-4) -> np.ndarray:
    """Central-difference Hessian of ``F`` around ``r.final_x``.

    In the unitary chart the coordinates are re-centred at the solution,
    ``U(y) = U_0 exp(sum_j y_j H_j)``, which spans the same tangent space as the
    global chart without its conjugate-point degeneracies.
    """
    problem = oc.problem
    layout = problem.layout
    if layout.dim == 0:
        return np.zeros((0, 0))
    if oc.chart == "unitary":
        u0 = np.asarray(r.final_U)
        plan, target = problem.plan, problem.target

        def func(y: np.ndarray) -> float:
            return fidelity(plan.matrix(u0 @ AntiHermitianExp(layout.generator_sum(y)).value), target)

    else:
        x0 = np.array(r.final_x.coords)

        def func(y: np.ndarray) -> float:
            return problem.evaluate(x0 + y).fidelity

    return _hessian(func, layout.dim, h)


def manifold_dimension(
    r: RunResult, oc: OptimizeConfig, h: float = 1e-4, rel_cutoff: float = 1e-6
) -> int:
    """Tangent dimension of the perfect-fidelity set at ``r``.

    Counts Hessian eigenvalues with ``|lambda| < rel_cutoff * max |lambda|``.

    Args:
        r: An on-manifold result.
        oc: Configuration whose chart and mask define the parameter space.
        h: Central-difference step.
        rel_cutoff: Null threshold relative to the largest eigenvalue magnitude.

    Returns:
        Number of null directions, in real coordinates of the chart.

    Raises:
        ValueError: if ``r`` is not on the manifold.
    """
    if not r.on_manifold:
        raise ValueError("manifold dimension needs an on-manifold result")
    hess = fidelity_hessian(r, oc, h)
    if hess.size == 0:
        return 0
    lam = np.linalg.eigvalsh(0.5 * (hess + hess.T))
    scale = np.max(np.abs(lam))
    if scale == 0.0:
        return len(lam)
    cutoff = rel_cutoff * scale
    if np.any(lam > cutoff):
        warnings.warn(
            f"Hessian has {int(np.sum(lam > cutoff))} positive eigenvalues above cutoff; not a maximum of F",
            RuntimeWarning,
            stacklevel=2,
        )
    return int(np.sum(np.abs(lam) < cutoff))


@dataclass(frozen=True)
class VerifyReport:
    fidelity: float
    success: float
    bounds: tuple[float, float]
    input_variance: float
    passed: bool

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (
            f"F={self.fidelity:.9f}, S={self.success:.6f}, "
            f"bounds=[{self.bounds[0]:.6f}, {self.bounds[1]:.6f}], "
            f"input-variance={self.input_variance:.3e}, {status}"
        )


def verify(u: np.ndarray, gate: TargetGate, cfg: ModeConfig, tol: float = 1e-9) -> VerifyReport:
    """Offline check of a candidate device matrix against a gate.

    Raises:
        DimensionError: if ``u`` does not match the layout size.
    """
    u = np.asarray(u, dtype=complex)
    if u.shape != (cfg.n_modes, cfg.n_modes):
        raise DimensionError(f"matrix is {u.shape}, layout needs {cfg.n_modes} modes")
    a = TransferPlan(cfg, gate.comp_basis, gate.out_basis).matrix(u)
    s = success(a)
    f = fidelity(a, gate) if s > 0 else 0.0
    return VerifyReport(
        fidelity=f,
        success=s,
        bounds=success_bounds(a),
        input_variance=input_state_variance(a),
        passed=abs(1.0 - f) < tol,
    )


def with_restarts(oc: OptimizeConfig, restarts: int, seed: int | None = None) -> OptimizeConfig:
    return replace(oc, restarts=restarts, seed=oc.seed if seed is None else seed)

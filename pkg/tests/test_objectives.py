import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import haar_unitary
from loqcopt import ModeConfig, fidelity, make_cs, make_ns, scaled_success, success, success_bounds
from loqcopt.errors import DimensionError, UndefinedFidelityError
from loqcopt.objectives import (
    GateProblem,
    fubini_study,
    gradient,
    inner,
    input_state_variance,
)
from loqcopt.param import random_start
from loqcopt.transfer import TransferPlan

CS = make_cs()
CS_CFG = ModeConfig(4, (1, 1))
CS_PLAN = TransferPlan(CS_CFG, CS.comp_basis, CS.out_basis)


def cs_transfer(u):
    return CS_PLAN.matrix(u)


def random_complex(rng, shape):
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)


def test_fidelity_of_target_with_itself():
    assert fidelity(CS.matrix, CS) == pytest.approx(1.0, abs=1e-15)


def test_identity_interferometer_against_cs():
    # identity passes states through unchanged; overlap with diag(1,1,1,-1) is 1/2
    a = cs_transfer(np.eye(6))
    assert fidelity(a, CS) == pytest.approx(0.25, abs=1e-14)
    assert success(a) == pytest.approx(1.0, abs=1e-14)


def test_fidelity_projective_invariance(rng):
    worst = 0.0
    for _ in range(1000):
        a = random_complex(rng, CS.matrix.shape)
        g = random_complex(rng, ())
        t = CS.matrix * random_complex(rng, ())
        worst = max(worst, abs(fidelity(g * a, t) - fidelity(a, CS)))
    assert worst < 1e-12


def test_fidelity_undefined_for_zero_operator():
    with pytest.raises(UndefinedFidelityError):
        fidelity(np.zeros_like(CS.matrix), CS)
    with pytest.raises(DimensionError):
        fidelity(np.zeros((3, 3)), CS)


def test_knill_type_amplitude_gives_two_over_twenty_seven():
    # A = g T with |g|^2 = 2/27, g = 0.272166...
    g = np.sqrt(2 / 27)
    assert g == pytest.approx(0.272166, abs=1e-6)
    a = g * CS.matrix
    assert fidelity(a, CS) == pytest.approx(1.0, abs=1e-15)
    assert success(a) == pytest.approx(2 / 27, abs=1e-15)


@given(st.floats(0.0, 1.0))
def test_fubini_study_is_monotone_decreasing_in_f(f):
    assert fubini_study(f) >= fubini_study(min(1.0, f + 1e-3)) - 1e-15
    assert fubini_study(1.0) == 0.0


def test_success_sandwich(rng):
    for seed in range(50):
        a = cs_transfer(haar_unitary(6, seed))
        lo, hi = success_bounds(a)
        s = success(a)
        assert lo - 1e-14 <= s <= hi + 1e-14


def test_scaled_success_of_contracted_diagonal():
    # sigma = 2 and amplitudes are degree-4 polynomials in W (four photons), so S scales by 2^-8
    w = np.diag([2.0, 1, 1, 1, 1, 1])
    raw = success(cs_transfer(w))
    assert scaled_success(w, CS_CFG, CS) == pytest.approx(success(cs_transfer(w / 2)), rel=1e-14)
    assert scaled_success(w, CS_CFG, CS) == pytest.approx(raw / 2**8, rel=1e-14)


@settings(deadline=None, max_examples=50)
@given(st.integers(0, 10**6), st.floats(1e-3, 1e3))
def test_scaled_success_scale_invariance(seed, c):
    rng = np.random.default_rng(seed)
    w = random_complex(rng, (6, 6))
    phase = np.exp(1j * rng.uniform(0, 2 * np.pi))
    a, b = scaled_success(w, CS_CFG, CS), scaled_success(c * phase * w, CS_CFG, CS)
    assert abs(a - b) <= 1e-10 * max(1.0, a)


def test_scaled_success_equals_success_on_unitaries():
    u = haar_unitary(6, 9)
    assert scaled_success(u, CS_CFG, CS) == pytest.approx(success(cs_transfer(u)), rel=1e-12)


@pytest.mark.parametrize("chart,frozen", [("unitary", ()), ("general", ()), ("unitary", (0, 2)), ("general", (1,))])
def test_analytic_gradient_matches_finite_differences(chart, frozen):
    problem = GateProblem(CS, CS_CFG, chart, frozen)
    worst = 0.0
    for seed in range(20):
        x = random_start(chart, 6, frozen, seed)
        if chart == "general":
            # move away from the tie between the free block and the frozen identity
            x = x.with_coords(1.5 * x.coords)
        for name in ("fidelity", "success"):
            an = gradient(name, x, problem, method="analytic")
            fd = gradient(name, x, problem, method="fd")
            worst = max(worst, np.max(np.abs(an - fd)))
    assert worst < 1e-6


def test_success_is_flat_along_global_phase():
    problem = GateProblem(CS, CS_CFG, "unitary")
    x = random_start("unitary", 6, (), 3)
    ds = gradient("success", x, problem, method="analytic")
    # the sum of the diagonal generators is i * identity, a global phase
    assert abs(np.sum(ds[:6])) < 1e-12


def test_gradient_rejects_unknown_method():
    problem = GateProblem(CS, CS_CFG, "unitary")
    with pytest.raises(ValueError):
        gradient("fidelity", np.zeros(problem.dim), problem, method="symbolic")
    with pytest.raises(ValueError):
        gradient("scaled_success", np.zeros(problem.dim), problem, method="analytic")


def test_fidelity_residual_norm_and_jacobian():
    problem = GateProblem(CS, CS_CFG, "general")
    x = 1.3 * random_start("general", 6, (), 5).coords
    res, jac = problem.fidelity_residual(x)
    assert np.dot(res, res) == pytest.approx(1.0 - problem.evaluate(x).fidelity, abs=1e-13)
    h = 1e-6
    for j in (0, 17, 50):
        e = np.zeros_like(x)
        e[j] = h
        fd = (problem.fidelity_residual(x + e)[0] - problem.fidelity_residual(x - e)[0]) / (2 * h)
        np.testing.assert_allclose(jac[:, j], fd, atol=1e-7)


def test_inner_product_normalization():
    assert inner(CS.matrix, CS.matrix).real == pytest.approx(1.0)


def test_input_state_variance_vanishes_at_perfect_fidelity(knill_run):
    a = cs_transfer(knill_run.final_U)
    assert knill_run.on_manifold
    assert input_state_variance(a) < 1e-10


def test_input_state_variance_positive_off_manifold():
    assert input_state_variance(cs_transfer(haar_unitary(6, 2))) > 1e-8


def test_ns_perfect_solution_has_quarter_success():
    # closed-form simplified NS interferometer: one ancilla photon, one vacuum mode
    r2 = np.sqrt(2)
    u = np.array(
        [
            [1 - r2, 2**-0.25, np.sqrt(3 / r2 - 2)],
            [2**-0.25, 0.5, 0.5 - 1 / r2],
            [np.sqrt(3 / r2 - 2), 0.5 - 1 / r2, r2 - 0.5],
        ]
    )
    ns = make_ns()
    plan = TransferPlan(ModeConfig(1, (1,), 1), ns.comp_basis, ns.out_basis)
    a = plan.matrix(u)
    assert fidelity(a, ns) == pytest.approx(1.0, abs=1e-12)
    assert success(a) == pytest.approx(0.25, abs=1e-12)

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import solve_ivp

from conftest import herm
from logscatter.errors import DomainError, NonConvergenceError
from logscatter.linop import unitarity_defect
from logscatter.prodint import (GridPolicy, OperatorFunction, improper_prod_integral,
                               prod_integral_left, prod_integral_right, tail_bound)


def ode_oracle(F, a, b, side):
    d = F.dim

    def rhs(t, y):
        Y = y.reshape(d, d)
        return (F(t) @ Y if side == "left" else Y @ F(t)).ravel()

    sol = solve_ivp(rhs, (a, b), np.eye(d, dtype=complex).ravel(), method="DOP853",
                    rtol=1e-13, atol=1e-13)
    return sol.y[:, -1].reshape(d, d)


ROT = OperatorFunction(lambda t: np.array([[0, t], [-t, 0]], dtype=complex), 2)
NONCOMM = OperatorFunction(
    lambda t: np.array([[0.3 * t, 1.0], [np.sin(t), -0.2]], dtype=complex), 2)


def test_constant_integrand():
    F = OperatorFunction(lambda t: np.array([[0.7 - 0.2j]]), 1)
    for f in (prod_integral_left, prod_integral_right):
        assert f(F, 0.0, 1.0)[0, 0] == pytest.approx(np.exp(0.7 - 0.2j), abs=1e-12)


def test_empty_interval_and_order():
    assert np.array_equal(prod_integral_left(ROT, 2.0, 2.0), np.eye(2))
    with pytest.raises(DomainError):
        prod_integral_right(ROT, 1.0, 0.0)


def test_commuting_family():
    B = np.array([[0.0, 1.0], [2.0, 0.5]])
    F = OperatorFunction(lambda t: np.cos(t) * B, 2)
    from scipy.linalg import expm
    ref = expm(np.sin(2.0) * B)
    assert np.linalg.norm(prod_integral_right(F, 0.0, 2.0) - ref, 2) < 1e-9


def test_rotation_matches_ode():
    got = prod_integral_right(ROT, 0.0, 1.0)
    assert np.linalg.norm(got - ode_oracle(ROT, 0.0, 1.0, "right"), 2) < 1e-8


def test_noncommuting_left_right_differ():
    L = prod_integral_left(NONCOMM, 0.0, 2.0)
    R = prod_integral_right(NONCOMM, 0.0, 2.0)
    assert np.linalg.norm(L - R, 2) > 1e-2
    assert np.linalg.norm(L - ode_oracle(NONCOMM, 0.0, 2.0, "left"), 2) < 1e-8
    assert np.linalg.norm(R - ode_oracle(NONCOMM, 0.0, 2.0, "right"), 2) < 1e-8


@pytest.mark.parametrize("b", [2.0, 10.0, 1e4])
def test_inverse_square_closed_form(b):
    c = 0.8
    F = OperatorFunction(lambda t: np.array([[c / t ** 2]]), 1)
    assert prod_integral_left(F, 1.0, b)[0, 0] == pytest.approx(math.exp(c * (1 - 1 / b)),
                                                               rel=1e-10)


def test_multiplicativity():
    a, b, c = -1.5, 0.3, 2.2
    full = prod_integral_left(NONCOMM, a, c)
    split = prod_integral_left(NONCOMM, b, c) @ prod_integral_left(NONCOMM, a, b)
    assert np.linalg.norm(full - split, 2) < 1e-8


def test_uniform_grid_and_refinement_consistency():
    g1 = GridPolicy(kind="uniform", initial_step=0.1)
    g2 = GridPolicy(kind="uniform", initial_step=0.05)
    r1 = prod_integral_left(NONCOMM, 0.0, 2.0, g1, tol=1e-11)
    r2 = prod_integral_left(NONCOMM, 0.0, 2.0, g2, tol=1e-11)
    assert np.linalg.norm(r1 - r2, 2) < 1e-9


def test_grid_policy_validation():
    with pytest.raises(DomainError):
        GridPolicy(kind="weird")
    with pytest.raises(DomainError):
        GridPolicy(initial_step=-1)
    with pytest.raises(DomainError):
        GridPolicy(kind="geometric", growth=1.0)


def test_refinement_limit_raises_with_estimate():
    F = OperatorFunction(lambda t: np.array([[np.sin(40 * t)]], dtype=complex), 1)
    with pytest.raises(NonConvergenceError) as info:
        prod_integral_left(F, 0.0, 10.0, GridPolicy(kind="uniform", initial_step=1.0,
                                                    max_refinements=2), tol=1e-14)
    assert info.value.estimate is not None


def test_improper_zero_converges_immediately():
    F = OperatorFunction(lambda t: np.zeros((2, 2)), 2, decay=(0.0, 2.0))
    M, rep = improper_prod_integral(F, 1.0, "+inf", "left")
    assert np.array_equal(M, np.eye(2))
    assert rep.converged and rep.refinements == 1 and rep.tail_bound == 0.0


@pytest.mark.parametrize("side", ["left", "right"])
def test_improper_inverse_square(side):
    c = 0.6
    F = OperatorFunction(lambda t: np.array([[c / t ** 2]]), 1, decay=(c, 2.0))
    M, rep = improper_prod_integral(F, 1.0, "+inf", side, tol=1e-9)
    assert M[0, 0] == pytest.approx(math.exp(c), rel=1e-8)
    assert rep.converged and rep.tail_bound < 1e-9


def test_improper_toward_minus_infinity_orders_factors():
    # left integral from -inf to -1 of a non-commuting decaying family vs a long finite one
    A = np.array([[0.0, 1.0], [-1.0, 0.0]])
    Bm = np.array([[1.0, 0.0], [0.0, -1.0]])
    F = OperatorFunction(lambda t: (A + Bm / t) / t ** 2, 2, decay=(2.0, 2.0))
    M, _ = improper_prod_integral(F, -1.0, "-inf", "left", tol=1e-10)
    ref = prod_integral_left(F, -2.0 ** 40, -1.0, tol=1e-11)
    assert np.linalg.norm(M - ref, 2) < 1e-8


def test_improper_observer_and_trace():
    seen = []
    F = OperatorFunction(lambda t: np.array([[1j / t ** 2]]), 1, decay=(1.0, 2.0))
    _, rep = improper_prod_integral(F, 1.0, "+inf", "right", tol=1e-6,
                                    observer=lambda *row: seen.append(row))
    assert seen == rep.trace and len(seen) == rep.refinements


def test_improper_nonconvergent_raises_report():
    F = OperatorFunction(lambda t: np.array([[1j / t]]), 1)  # log divergent phase
    with pytest.raises(NonConvergenceError) as info:
        improper_prod_integral(F, 1.0, "+inf", "left", tol=1e-10, max_doublings=12)
    assert info.value.report is not None and not info.value.report.converged


def test_improper_argument_validation():
    with pytest.raises(DomainError):
        improper_prod_integral(ROT, 1.0, "up", "left")
    with pytest.raises(DomainError):
        improper_prod_integral(ROT, 1.0, "+inf", "middle")


def test_tail_bound_values():
    assert tail_bound((1.0, 2.0), 1000.0) == pytest.approx(math.expm1(1e-3))
    assert tail_bound(None, 10.0) == math.inf
    assert tail_bound((1.0, 1.0), 10.0) == math.inf


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.sampled_from([1, 2, 3]),
       st.sampled_from(["left", "right"]))
def test_skew_hermitian_gives_unitary(seed, dim, side):
    rng = np.random.default_rng(seed)
    H0, H1 = herm(rng, dim), herm(rng, dim)
    F = OperatorFunction(lambda t: -1j * (H0 + np.cos(3 * t) * H1), dim)
    fn = prod_integral_left if side == "left" else prod_integral_right
    assert unitarity_defect(fn(F, -1.0, 2.0)) < 1e-9

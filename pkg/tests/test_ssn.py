import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from solvers.ssn import (ActiveSet, NewtonIterationLimit, SsnConfig, Subproblem, active_set, evaluate,
                         hess_apply, line_search, newton_direction, psi_grad, psi_value, select_backend, ssn_solve)
from utils.logistic_utils import DomainError, in_domain

from conftest import dual_point, random_problem


@pytest.fixture
def subproblem(rng, small_instance):
    return Subproblem(rng.standard_normal(small_instance.n), 0.3, 5.0, 7.0, small_instance)


def test_psi_gradient_matches_finite_differences(rng, subproblem):
    u = dual_point(rng, subproblem.inst.b)
    h = 1e-8
    fd = np.array([(psi_value(u + h * e, subproblem) - psi_value(u - h * e, subproblem)) / (2 * h)
                   for e in np.eye(u.shape[0])])
    assert_allclose(psi_grad(u, subproblem), fd, rtol=1e-5, atol=1e-6)


def test_evaluate_recovers_primal_candidates(rng, subproblem):
    u = dual_point(rng, subproblem.inst.b)
    ev = evaluate(u, subproblem)
    assert_allclose(ev.x, subproblem.w_tilde - subproblem.sigma * subproblem.inst.A.rmatvec(u))
    assert ev.v == pytest.approx(subproblem.v_tilde - subproblem.gamma * u.sum())
    assert np.all((ev.w == 0) == (np.abs(ev.x) <= subproblem.threshold))


def test_active_set_excludes_ties(small_instance):
    sub = Subproblem(np.zeros(small_instance.n), 0.0, 2.0, 1.0, small_instance)
    thr = sub.threshold
    x = np.zeros(small_instance.n)
    x[:3] = [thr, -2.0 * thr, 0.5 * thr]
    assert_array_equal(active_set(None, sub, x=x).J, [1])


@pytest.mark.parametrize("m, r, expected", [(100, 10, "smw"), (100, 60, "dense"), (5000, 4000, "cg")])
def test_backend_selection(m, r, expected):
    assert select_backend(m, r, SsnConfig()) == expected


@pytest.mark.parametrize("r", [0, 5, 40])
def test_newton_backends_agree(rng, r):
    inst = random_problem(rng, 50, 80, density=0.3)
    sub = Subproblem(rng.standard_normal(80), 0.0, 20.0, 3.0, inst)
    u = dual_point(rng, inst.b)
    active = ActiveSet(np.sort(rng.choice(80, size=r, replace=False)))
    g = psi_grad(u, sub)
    dense = newton_direction(u, active, sub, 1e-13, grad=g, backend="dense")
    smw = newton_direction(u, active, sub, 1e-13, grad=g, backend="smw")
    cg = newton_direction(u, active, sub, 1e-12 * np.linalg.norm(g), grad=g, backend="cg")
    assert np.linalg.norm(smw.d - dense.d) <= 1e-8 * np.linalg.norm(dense.d)
    assert np.linalg.norm(cg.d - dense.d) <= 1e-6 * np.linalg.norm(dense.d)
    assert np.linalg.norm(hess_apply(u, active, sub, dense.d) + g) <= 1e-8 * np.linalg.norm(g)


def test_line_search_decreases_psi(rng, subproblem):
    u = dual_point(rng, subproblem.inst.b)
    current = evaluate(u, subproblem)
    step = newton_direction(u, active_set(u, subproblem, x=current.x), subproblem, 1e-10, grad=current.grad)
    alpha, ev, backtracks = line_search(u, step.d, subproblem, current=current)
    assert 0 < alpha <= 1
    assert ev.value <= current.value
    assert in_domain(u + alpha * step.d, subproblem.inst.b)


def test_ssn_reaches_a_stationary_point(rng, subproblem):
    u0 = -2e-7 * subproblem.inst.b / subproblem.inst.m
    result = ssn_solve(subproblem, u0, SsnConfig())
    assert result.grad_norms[-1] <= 1e-8
    assert result.domain_ok
    assert all(np.diff(result.psi_values) <= 1e-12)
    # a stalled solve counts the rejected direction too
    assert sum(result.backends.values()) - result.iterations in (0, 1)


def test_ssn_stops_on_the_callers_predicate(rng, subproblem):
    u0 = dual_point(rng, subproblem.inst.b)
    result = ssn_solve(subproblem, u0, stop=lambda u, ev: True)
    assert result.iterations == 0
    assert_array_equal(result.u, u0)


def test_ssn_iteration_limit_carries_the_iterate(rng, subproblem):
    u0 = -2e-7 * subproblem.inst.b / subproblem.inst.m
    with pytest.raises(NewtonIterationLimit) as info:
        ssn_solve(subproblem, u0, SsnConfig(max_newton_iters=1, grad_tol=0.0), stop=lambda u, ev: False)
    assert info.value.iterations == 1
    assert in_domain(info.value.u, subproblem.inst.b)


def test_ssn_rejects_points_outside_the_domain(subproblem):
    with pytest.raises(DomainError):
        ssn_solve(subproblem, np.zeros(subproblem.inst.m))


def test_config_validation(small_instance):
    with pytest.raises(ValueError):
        SsnConfig(mu=0.6)
    with pytest.raises(ValueError):
        SsnConfig(eta=1.0)
    with pytest.raises(ValueError):
        Subproblem(np.zeros(small_instance.n), 0.0, 0.0, 1.0, small_instance)
    with pytest.raises(ValueError):
        Subproblem(np.zeros(3), 0.0, 1.0, 1.0, small_instance)

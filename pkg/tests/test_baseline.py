import numpy as np
import pytest

from problem import ProblemInstance
from solvers.baseline import BaselineConfig, BaselineError, prox_grad_solve
from solvers.ppdna import kkt_residual_rel
from utils.logistic_utils import lambda_max, logistic_loss_grad, primal_objective

from conftest import random_problem


def test_above_lambda_max_gives_the_intercept_model(rng):
    A = rng.standard_normal((24, 10))
    b = np.array([1.0] * 18 + [-1.0] * 6)
    sol = prox_grad_solve(ProblemInstance(A, b, 1.05 * lambda_max(A, b)))
    assert np.abs(sol.w).max() <= 1e-8
    assert sol.v == pytest.approx(np.log(3.0), abs=1e-5)


def test_unregularized_fit_is_stationary():
    A = np.array([[1.0], [2.0], [3.0], [1.0], [2.0], [3.0]])
    b = np.array([1.0, 1.0, -1.0, -1.0, 1.0, -1.0])
    inst = ProblemInstance(A, b, 0.0)
    sol = prox_grad_solve(inst, BaselineConfig(tol=1e-10))
    x = inst.A.matvec(sol.w) + sol.v
    g = logistic_loss_grad(x, b)
    assert sol.rkkt.total <= 1e-10
    assert np.linalg.norm(inst.A.rmatvec(g)) <= 1e-9
    assert abs(g.sum()) <= 1e-9


def test_objectives_are_monotone_and_reported(small_instance):
    sol = prox_grad_solve(small_instance)
    assert sol.objective == pytest.approx(primal_objective(sol.w, sol.v, small_instance))
    assert sol.objective <= primal_objective(np.zeros(small_instance.n), 0.0, small_instance)
    u = logistic_loss_grad(small_instance.A.matvec(sol.w) + sol.v, small_instance.b)
    y = small_instance.A.matvec(sol.w) + sol.v
    assert kkt_residual_rel(sol.w, sol.v, y, u, small_instance).total <= BaselineConfig().tol


def test_iteration_limit_raises(rng):
    inst = random_problem(rng, 30, 50, frac=0.05)
    with pytest.raises(BaselineError):
        prox_grad_solve(inst, BaselineConfig(max_iters=3))


def test_config_validation(small_instance):
    with pytest.raises(ValueError):
        BaselineConfig(tol=0.0)
    with pytest.raises(ValueError):
        BaselineConfig(backtrack=1.0)
    with pytest.raises(ValueError):
        prox_grad_solve(small_instance.with_lambda(-1.0))

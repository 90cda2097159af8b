import math

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from problem import ProblemInstance
from problem.dataset_readers import synth_gen
from problem.design_matrix import DesignMatrix
from solvers.ppdna import PpdnaConfig, ppdna_solve
from solvers.sieving import (PathConfig, SievingError, as_path, expand_index_set, initial_screen,
                             kkt_residual_rel_reduced, res_full,
                             res_reduced, solve_reduced)
from utils.logistic_utils import lambda_max
from utils.prox_utils import support


@pytest.fixture(scope="module")
def small_synthetic():
    return synth_gen(40, 300, seed=4)


def test_initial_screen_ranks_by_correlation():
    b = np.array([1.0, -1.0, 1.0, -1.0])
    A = np.column_stack([
        [0.1, 0.2, 0.0, 0.3],
        [1.0, -1.0, 1.0, -1.0],
        [0.0, 0.0, 0.0, 0.0],
        [1.0, -1.0, 0.5, 0.0],
        [2.0, -2.0, 2.0, -2.0],
    ])
    # columns 1 and 4 tie at s=1; ceil(sqrt(5)) = 3 keeps column 3 next
    assert_array_equal(initial_screen(DesignMatrix(A), b), [1, 3, 4])
    assert_array_equal(initial_screen(DesignMatrix(A), b, count=1), [1])


def test_initial_screen_ties_prefer_smaller_indices():
    A = np.tile(np.array([[1.0], [-1.0], [1.0]]), (1, 10))
    assert_array_equal(initial_screen(DesignMatrix(A), np.array([1.0, -1.0, 1.0])), np.arange(math.ceil(math.sqrt(10))))


def test_expansion_uses_a_strict_inequality():
    inst = ProblemInstance(np.eye(3), np.array([1.0, -1.0, 1.0]), 1.0)
    eps = 0.0
    u = np.array([0.0, -1.0, 1.5])
    J = expand_index_set(np.zeros(3), u, [0], eps, 1.0, inst)
    assert_array_equal(J, [2])
    with pytest.raises(ValueError):
        expand_index_set(np.array([0.0, 1.0, 0.0]), u, [0], eps, 1.0, inst)
    assert expand_index_set(np.zeros(3), u, [0, 1, 2], eps, 1.0, inst).size == 0


def test_residuals_agree_when_zero_extended(small_synthetic):
    inst = ProblemInstance(small_synthetic.X, small_synthetic.b, 0.5 * lambda_max(small_synthetic.X, small_synthetic.b))
    sol = ppdna_solve(inst)
    I = support(sol.w)
    assert res_reduced(sol.w[I], sol.v, sol.y, sol.u, I, inst) <= res_full(sol.w, sol.v, sol.y, sol.u, inst) + 1e-12
    with pytest.raises(ValueError):
        res_reduced(sol.w, sol.v, sol.y, sol.u, I[:1], inst)


def test_solve_reduced_meets_the_absolute_bound(small_synthetic):
    lam = 0.1 * lambda_max(small_synthetic.X, small_synthetic.b)
    inst = ProblemInstance(small_synthetic.X, small_synthetic.b, lam)
    cfg = PathConfig(lambdas=[lam])
    I = initial_screen(inst.A, inst.b)
    warm = (np.zeros(I.shape[0]), 0.0, -2e-7 * inst.b / inst.m)
    z, v, y, u, outer, inner = solve_reduced(I, lam, warm, inst, cfg)
    eps = cfg.resolve_eps(inst.b)
    assert res_reduced(z, v, y, u, I, inst) <= eps / math.sqrt(2.0)
    assert outer >= 1 and inner >= 0
    with pytest.raises(ValueError):
        solve_reduced(np.array([], dtype=int), lam, warm, inst, cfg)


def test_tightened_resolves_continue_from_the_last_penalties(small_synthetic, monkeypatch):
    import solvers.sieving as sieving

    calls = []

    def recording_solve(inst, init=None, cfg=None, **kwargs):
        sol = ppdna_solve(inst, init=init, cfg=cfg, **kwargs)
        calls.append((cfg, sol))
        return sol

    monkeypatch.setattr(sieving, "ppdna_solve", recording_solve)
    lam = 0.1 * lambda_max(small_synthetic.X, small_synthetic.b)
    inst = ProblemInstance(small_synthetic.X, small_synthetic.b, lam)
    # a loose solver tolerance forces at least one tightened re-solve
    cfg = PathConfig(lambdas=[lam], solver=PpdnaConfig(tol=1e-2))
    I = initial_screen(inst.A, inst.b)
    solve_reduced(I, lam, (np.zeros(I.shape[0]), 0.0, -2e-7 * inst.b / inst.m), inst, cfg)
    assert len(calls) >= 2
    for (_, previous), (next_cfg, _) in zip(calls, calls[1:]):
        assert next_cfg.tol < 1e-2
        assert (next_cfg.sigma0, next_cfg.gamma0) == (previous.sigma, previous.gamma)


@pytest.mark.parametrize("lambdas", [[], [0.1, 0.2], [0.1, 0.1], [0.2, -0.1]])
def test_grid_validation(lambdas):
    with pytest.raises(ValueError):
        PathConfig(lambdas=lambdas)


def test_default_eps_scales_with_labels():
    b = np.array([1.0, -1.0, 1.0, -1.0])
    assert PathConfig(lambdas=[1.0]).resolve_eps(b) == pytest.approx(1e-6 * (1 + 2.0 / 4))
    assert PathConfig(lambdas=[1.0], eps=1e-4).resolve_eps(b) == 1e-4


def test_path_matches_full_solves(small_synthetic):
    X, b = small_synthetic.X, small_synthetic.b
    lam_max = lambda_max(X, b)
    seen = []
    path = as_path(X, b, PathConfig(lambdas=[f * lam_max for f in (0.5, 0.1, 0.05)]), callback=seen.append)
    assert len(path.entries) == len(seen) == 3
    for entry in path.entries:
        assert entry.res <= path.eps
        assert 1 <= entry.sieve_rounds <= 5
        assert entry.nnz <= entry.index_size
        full = ppdna_solve(ProblemInstance(X, b, entry.lam), cfg=PpdnaConfig(tol=1e-8))
        assert entry.objective == pytest.approx(full.objective, rel=1e-6)
        assert_array_equal(support(entry.w, 1e-8), support(full.w, 1e-8))
    sizes = [e.index_size for e in path.entries]
    assert sizes == sorted(sizes)
    record = path.entries[0].as_record()
    assert set(record) >= {"lambda", "nnx", "iAS", "iOuter", "iInner", "res", "time"}


def test_path_gives_up_after_the_round_limit(small_synthetic):
    X, b = small_synthetic.X, small_synthetic.b
    lam = 0.05 * lambda_max(X, b)
    cfg = PathConfig(lambdas=[lam], max_sieve_rounds=1)
    with pytest.raises(SievingError):
        # a single screened coordinate cannot hold the support at this lambda
        as_path(X, b, cfg, initial_index=[0])


@pytest.mark.slow
def test_case1_path(case1):
    lam_max = lambda_max(case1.X, case1.b)
    path = as_path(case1.X, case1.b, PathConfig(lambdas=[f * lam_max for f in (0.5, 0.1, 0.05)]))
    for entry in path.entries:
        assert entry.res <= path.eps
        assert entry.sieve_rounds <= 5
        full = ppdna_solve(ProblemInstance(case1.X, case1.b, entry.lam), cfg=PpdnaConfig(tol=1e-8))
        assert entry.objective == pytest.approx(full.objective, rel=1e-6)
        assert_array_equal(support(entry.w, 1e-8), support(full.w, 1e-8))


def test_precomputed_products_give_the_same_residuals(small_synthetic):
    inst = ProblemInstance(small_synthetic.X, small_synthetic.b, 0.1 * lambda_max(small_synthetic.X, small_synthetic.b))
    sol = ppdna_solve(inst)
    I = support(sol.w)
    Atu = inst.A.rmatvec(sol.u)
    AI = inst.A.columns(I)
    assert res_full(sol.w, sol.v, sol.y, sol.u, inst, Atu=Atu) == res_full(sol.w, sol.v, sol.y, sol.u, inst)
    assert (res_reduced(sol.w[I], sol.v, sol.y, sol.u, I, inst, AI=AI)
            == res_reduced(sol.w[I], sol.v, sol.y, sol.u, I, inst))
    first = kkt_residual_rel_reduced(sol.w[I], sol.v, sol.y, sol.u, I, inst, AI=AI)
    second = kkt_residual_rel_reduced(sol.w[I], sol.v, sol.y, sol.u, I, inst)
    assert (first.rkkt1, first.rkkt2) == (second.rkkt1, second.rkkt2)
    eps = 1e-3
    small = np.setdiff1d(np.arange(inst.n), np.flatnonzero(np.abs(Atu) > inst.lam))[:5]
    assert_array_equal(expand_index_set(np.zeros(inst.n), sol.u, small, eps, inst.lam, inst, Atu=Atu),
                       expand_index_set(np.zeros(inst.n), sol.u, small, eps, inst.lam, inst))


def test_full_index_set_reproduces_ppdna(small_synthetic):
    X, b = small_synthetic.X, small_synthetic.b
    lam = 0.1 * lambda_max(X, b)
    # a loose eps keeps the reduced solve at the plain relative tolerance
    path = as_path(X, b, PathConfig(lambdas=[lam], eps=1.0), initial_index=np.arange(X.n))
    sol = ppdna_solve(ProblemInstance(X, b, lam))
    entry = path.entries[0]
    assert entry.sieve_rounds == 1 and entry.index_size == X.n
    assert (entry.outer_iters, entry.inner_iters) == (sol.outer_iters, sol.inner_iters_total)
    assert_allclose(entry.w, sol.w, rtol=0, atol=1e-12)
    assert entry.v == pytest.approx(sol.v, abs=1e-12)


def test_index_sets_grow_within_each_grid_point(small_synthetic):
    X, b = small_synthetic.X, small_synthetic.b
    lam_max = lambda_max(X, b)
    # start from the column least correlated with the labels so the first point has to grow
    weakest = int(np.argmin(np.abs(X.rmatvec(b))))
    path = as_path(X, b, PathConfig(lambdas=[f * lam_max for f in (0.5, 0.1, 0.05)]), initial_index=[weakest])
    first = path.entries[0]
    assert first.round_sizes[0] == 1 and first.sieve_rounds > 1
    previous = None
    for entry in path.entries:
        sizes = entry.round_sizes
        assert len(sizes) == entry.sieve_rounds
        assert sizes == sorted(sizes)
        assert sizes[-1] == entry.index_size
        if previous is not None:
            assert sizes[0] == previous
        previous = entry.index_size
        assert entry.res <= path.eps


@pytest.mark.slow
def test_sieving_beats_full_solves():
    data = synth_gen(600, 15000, seed=1)
    lam_max = lambda_max(data.X, data.b)
    lambdas = [f * lam_max for f in (0.5, 0.1, 0.05)]
    data.X.columns([0])
    path = as_path(data.X, data.b, PathConfig(lambdas=lambdas))
    full = [ppdna_solve(ProblemInstance(data.X, data.b, lam)) for lam in lambdas]
    assert path.wall_time <= 0.5 * sum(sol.wall_time for sol in full)
    for entry, sol in zip(path.entries, full):
        assert entry.objective == pytest.approx(sol.objective, rel=1e-5)

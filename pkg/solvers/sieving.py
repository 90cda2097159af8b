import logging
import math
from dataclasses import dataclass, field, fields, replace
from typing import List

import numpy as np
from tqdm import tqdm

from problem import ProblemInstance
from solvers.ppdna import KktReport, PpdnaConfig, default_start, ppdna_solve
from utils.logistic_utils import logistic_loss_grad, primal_objective
from utils.prox_utils import soft_threshold
from utils.timer import Timer

logger = logging.getLogger(__name__)


class SievingError(RuntimeError):
    pass


@dataclass
class PathConfig:
    lambdas: List[float]
    eps: float = 0.0            # 0 means 1e-6 * (1 + ||b|| / m)
    max_sieve_rounds: int = 50
    max_tighten: int = 30
    solver: PpdnaConfig = field(default_factory=PpdnaConfig)

    def __post_init__(self):
        lambdas = np.asarray(self.lambdas, dtype=np.float64)
        if lambdas.ndim != 1 or lambdas.shape[0] == 0:
            raise ValueError("the lambda grid is empty")
        if np.any(lambdas <= 0):
            raise ValueError("grid values must be positive")
        if np.any(np.diff(lambdas) >= 0):
            raise ValueError("the lambda grid must be strictly decreasing")
        if self.eps < 0:
            raise ValueError("eps must be positive (or 0 for the default)")
        self.lambdas = [float(lam) for lam in lambdas]

    def resolve_eps(self, b):
        if self.eps > 0:
            return self.eps
        return 1e-6 * (1.0 + np.linalg.norm(b) / b.shape[0])

    @classmethod
    def from_params(cls, params, lambdas, solver):
        kwargs = {f.name: getattr(params, f.name) for f in fields(cls)
                  if f.name not in ("lambdas", "solver") and hasattr(params, f.name)}
        return cls(lambdas=lambdas, solver=solver, **kwargs)


@dataclass
class SieveState:
    I: np.ndarray
    l: int
    z: np.ndarray
    w: np.ndarray
    v: float
    y: np.ndarray
    u: np.ndarray


@dataclass
class PathEntry:
    lam: float
    w: np.ndarray
    v: float
    res: float
    sieve_rounds: int
    outer_iters: int
    inner_iters: int
    index_size: int
    wall_time: float
    objective: float
    round_sizes: List[int] = field(default_factory=list)

    @property
    def nnz(self):
        return int(np.count_nonzero(self.w))

    def as_record(self):
        return {
            "lambda": self.lam,
            "nnx": self.nnz,
            "iAS": self.sieve_rounds,
            "iOuter": self.outer_iters,
            "iInner": self.inner_iters,
            "res": self.res,
            "index_size": self.index_size,
            "objective": self.objective,
            "time": self.wall_time,
        }


@dataclass
class PathResult:
    entries: List[PathEntry] = field(default_factory=list)
    eps: float = 0.0
    wall_time: float = 0.0


def initial_screen(A, b, count=None):
    """
    Ranks features by s_i = |<a_i, b>| / (||a_i|| ||b||) and keeps the `count`
    largest (default ceil(sqrt(n))); ties go to the smaller index.
    """
    n = A.n
    if count is None:
        count = math.ceil(math.sqrt(n))
    norms = A.column_norms() * np.linalg.norm(b)
    corr = np.abs(A.rmatvec(b))
    s = np.divide(corr, norms, out=np.zeros(n), where=norms > 0)
    order = np.argsort(-s, kind="stable")
    return np.sort(order[:min(count, n)])


def _four_term_residual(w_part, A_part, v, y, u, inst, Atu=None):
    if Atu is None:
        Atu = A_part.rmatvec(u)
    return max(
        np.linalg.norm(logistic_loss_grad(y, inst.b) - u),
        np.linalg.norm(w_part - soft_threshold(w_part - Atu, inst.lam)),
        np.linalg.norm(y - A_part.matvec(w_part) - v),
        abs(u.sum()),
    )


def res_full(w, v, y, u, inst, Atu=None):
    return float(_four_term_residual(w, inst.A, v, y, u, inst, Atu=Atu))


def res_reduced(z, v, y, u, I, inst, AI=None):
    I = np.asarray(I, dtype=np.intp)
    if z.shape[0] != I.shape[0]:
        raise ValueError("reduced solution has {} entries for {} indices".format(z.shape[0], I.shape[0]))
    AI = inst.A.columns(I) if AI is None else AI
    return float(_four_term_residual(z, AI, v, y, u, inst))


def kkt_residual_rel_reduced(z, v, y, u, I, inst, AI=None):
    # relative KKT of the reduced problem, normalized by full-length quantities
    AI = inst.A.columns(I) if AI is None else AI
    Atu = inst.A.rmatvec(u)
    Atu_I = Atu[I]
    margin = AI.matvec(z) + v
    s = float(u.sum())
    r_prox = np.linalg.norm(z - soft_threshold(z - Atu_I, inst.lam)) / (1.0 + np.linalg.norm(z) + np.linalg.norm(Atu))
    r_feas = np.linalg.norm(y - margin) / (1.0 + np.linalg.norm(y) + np.linalg.norm(margin))
    return KktReport(float(max(r_prox, abs(s) / (1.0 + abs(s)))), float(r_feas))


def expand_index_set(w, u, I, eps, lam, inst, Atu=None):
    """
    Coordinates outside I whose dual certificate leaves the inflated box:
    |(A^T u)_j| > lam + eps / sqrt(2 |complement of I|). Requires w_j = 0 off I.
    `Atu` may carry a precomputed A^T u.
    """
    mask = np.ones(inst.n, dtype=bool)
    mask[np.asarray(I, dtype=np.intp)] = False
    outside = np.flatnonzero(mask)
    if outside.size == 0:
        return outside
    if np.any(w[outside] != 0):
        raise ValueError("w must vanish off the index set")
    if Atu is None:
        Atu = inst.A.rmatvec(u)
    return outside[np.abs(Atu[outside]) > lam + eps / math.sqrt(2.0 * outside.size)]


def solve_reduced(I, lam, warm, inst, cfg: PathConfig, eps=None):
    """
    PPDNA on the columns I until the absolute reduced residual is at most
    eps / sqrt(2); the relative tolerance is halved until that holds, each
    re-solve continuing from the last iterate and penalties.
    Returns (z, v, y, u, outer iterations, inner iterations).
    """
    I = np.asarray(I, dtype=np.intp)
    if I.size == 0:
        raise ValueError("the index set is empty")
    if lam <= 0:
        raise ValueError("lambda must be positive")
    full = inst.with_lambda(lam)
    reduced = full.restrict(I)
    AI = reduced.A
    eps = cfg.resolve_eps(inst.b) if eps is None else eps
    target = eps / math.sqrt(2.0)

    solver = cfg.solver
    init = warm
    outer = inner = 0
    for _ in range(cfg.max_tighten + 1):
        sol = ppdna_solve(reduced, init=init, cfg=solver,
                          residual_fn=lambda z, v, y, u: kkt_residual_rel_reduced(z, v, y, u, I, full, AI=AI))
        outer += sol.outer_iters
        inner += sol.inner_iters_total
        res = res_reduced(sol.w, sol.v, sol.y, sol.u, I, full, AI=AI)
        if res <= target:
            return sol.w, sol.v, sol.y, sol.u, outer, inner
        logger.debug("reduced residual %.2e above %.2e; tightening tol to %.1e", res, target, solver.tol / 2)
        solver = replace(solver, tol=solver.tol / 2.0, sigma0=sol.sigma, gamma0=sol.gamma)
        init = (sol.w, sol.v, sol.u)
    raise SievingError("reduced problem did not reach residual {:.2e} (last {:.2e})".format(target, res))


def _extend(z, I, n):
    w = np.zeros(n)
    w[I] = z
    return w


def as_path(A, b, cfg: PathConfig, initial_index=None, callback=None, progress=False):
    """
    Adaptive sieving over the decreasing grid cfg.lambdas. Each grid point
    starts from the previous final index set (the screened set for the first
    one) and is re-solved on a growing index set until the full residual is
    at most eps.
    """
    inst = ProblemInstance(A, b, cfg.lambdas[0])
    eps = cfg.resolve_eps(inst.b)
    result = PathResult(eps=eps)
    total = Timer().start()

    I = np.sort(np.asarray(initial_index, dtype=np.intp)) if initial_index is not None else initial_screen(inst.A, inst.b)
    z0, v0, u0 = default_start(inst.restrict(I), cfg.solver)
    warm = (z0, v0, u0)

    for lam in tqdm(cfg.lambdas, desc="Sieving path", disable=not progress):
        timer = Timer().start()
        full = inst.with_lambda(lam)
        outer = inner = 0
        z, v, y, u, o, i = solve_reduced(I, lam, warm, full, cfg, eps=eps)
        outer, inner = outer + o, inner + i
        w = _extend(z, I, full.n)
        Atu = full.A.rmatvec(u)
        res = res_full(w, v, y, u, full, Atu=Atu)
        rounds = 1
        sizes = [int(I.shape[0])]
        state = SieveState(I=I, l=0, z=z, w=w, v=v, y=y, u=u)
        target_eps = eps

        while res > eps:
            if rounds >= cfg.max_sieve_rounds:
                raise SievingError("lambda={:.3e}: {} sieve rounds without reaching eps={:.2e} (res={:.2e})"
                                   .format(lam, rounds, eps, res))
            J = expand_index_set(state.w, state.u, state.I, eps, lam, full, Atu=Atu)
            if J.size == 0:
                # numerical slack between reduced and full residuals: re-solve tighter
                logger.debug("lambda=%.3e: empty expansion with res=%.2e", lam, res)
                target_eps /= 2.0
            else:
                target_eps = eps
            I_next = np.union1d(state.I, J)
            pos = np.searchsorted(I_next, state.I)
            z_warm = np.zeros(I_next.shape[0])
            z_warm[pos] = state.z
            z, v, y, u, o, i = solve_reduced(I_next, lam, (z_warm, state.v, state.u), full, cfg, eps=target_eps)
            outer, inner = outer + o, inner + i
            w = _extend(z, I_next, full.n)
            Atu = full.A.rmatvec(u)
            res = res_full(w, v, y, u, full, Atu=Atu)
            rounds += 1
            sizes.append(int(I_next.shape[0]))
            logger.info("lambda=%.3e round %d: |I|=%d (+%d) res=%.2e", lam, rounds, I_next.shape[0], J.size, res)
            state = SieveState(I=I_next, l=state.l + 1, z=z, w=w, v=v, y=y, u=u)

        entry = PathEntry(lam=lam, w=state.w, v=state.v, res=res, sieve_rounds=rounds, outer_iters=outer,
                          inner_iters=inner, index_size=int(state.I.shape[0]), wall_time=timer.get_elapsed_time(),
                          objective=primal_objective(state.w, state.v, full), round_sizes=sizes)
        result.entries.append(entry)
        if callback is not None:
            callback(entry)
        logger.info("lambda=%.3e nnz=%d iAS=%d outer=%d inner=%d res=%.2e", lam, entry.nnz, rounds, outer, inner, res)

        I = state.I
        warm = (state.z, state.v, state.u)

    result.wall_time = total.get_elapsed_time()
    return result

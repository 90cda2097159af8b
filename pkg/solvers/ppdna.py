import logging
from collections import Counter
from dataclasses import asdict, dataclass, field, fields
from typing import Callable, List, Optional

import numpy as np

from problem import ProblemInstance
from solvers.ssn import NewtonIterationLimit, SsnConfig, Subproblem, psi_value, ssn_solve
from utils.general_utils import get_summable_tol_func
from utils.logistic_utils import primal_objective, recover_y
from utils.prox_utils import soft_threshold
from utils.timer import Timer

logger = logging.getLogger(__name__)

GAP_FLOOR = -1e-10


@dataclass
class PpdnaConfig:
    sigma0: float = 0.0         # 0 means sigma_scale / lambda
    gamma0: float = 0.0         # 0 means sigma_scale / lambda
    sigma_scale: float = 40.0
    sigma_cap: float = 5e4
    rho_growth: float = 1.01
    rho_trigger: float = 0.01
    eps_coef: float = 9.0
    eps_power: float = 1.01
    delta_coef: float = 9.0
    delta_power: float = 1.01
    delta_cap: float = 0.999
    tol: float = 1e-6
    max_outer: int = 500
    u0_scale: float = 2e-7
    ssn: SsnConfig = field(default_factory=SsnConfig)

    def __post_init__(self):
        if self.sigma0 < 0 or self.gamma0 < 0:
            raise ValueError("sigma0 and gamma0 must be positive (or 0 for the default)")
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if not 0 <= self.delta_cap < 1:
            raise ValueError("delta_cap must lie in [0, 1)")
        if self.max_outer < 1:
            raise ValueError("max_outer must be positive")

    def initial_sigma_gamma(self, lam):
        default = min(self.sigma_cap, self.sigma_scale / lam)
        return (self.sigma0 or default), (self.gamma0 or default)

    @classmethod
    def from_params(cls, params, ssn_params=None):
        kwargs = {f.name: getattr(params, f.name) for f in fields(cls) if f.name != "ssn" and hasattr(params, f.name)}
        if ssn_params is not None:
            kwargs["ssn"] = SsnConfig.from_params(ssn_params)
        return cls(**kwargs)


@dataclass
class KktReport:
    rkkt1: float
    rkkt2: float

    @property
    def total(self):
        return max(self.rkkt1, self.rkkt2)


@dataclass
class OuterState:
    w: np.ndarray
    v: float
    u: np.ndarray
    y: np.ndarray
    k: int
    sigma: float
    gamma: float
    last_rkkt1: Optional[float] = None
    prev_rkkt1: Optional[float] = None


@dataclass
class OuterRecord:
    k: int
    inner: int
    gap: float
    rkkt1: float
    rkkt2: float
    sigma: float
    gamma: float
    objective: float

    def as_dict(self):
        return asdict(self)


@dataclass
class GapMonitor:
    last_gap: float = float("nan")
    violations: int = 0
    min_gap: float = float("inf")


@dataclass
class Solution:
    w: np.ndarray
    v: float
    y: np.ndarray
    u: np.ndarray
    rkkt: KktReport
    outer_iters: int
    inner_iters_total: int
    wall_time: float
    converged: bool
    objective: float
    history: List[OuterRecord] = field(default_factory=list)
    backends: Counter = field(default_factory=Counter)
    gap_violations: int = 0
    residual_misses: int = 0
    inner_limit_hits: int = 0
    sigma: float = 0.0
    gamma: float = 0.0

    @property
    def nnz(self):
        return int(np.count_nonzero(self.w))

    @property
    def iterations(self):
        return "{}({})".format(self.outer_iters, self.inner_iters_total)


def fk_value(w, v, w_k, v_k, sigma, gamma, inst):
    dw = w - w_k
    prox_term = (dw @ dw + (sigma / gamma) * (v - v_k) ** 2) / (2.0 * sigma)
    return primal_objective(w, v, inst) + prox_term


def primal_update(u_next, state, inst):
    w = soft_threshold(state.w - state.sigma * inst.A.rmatvec(u_next), state.sigma * inst.lam)
    v = state.v - state.gamma * u_next.sum()
    return w, float(v), recover_y(u_next, inst.b)


def inner_stop_check(w_next, v_next, u_next, state, eps_k, delta_k, inst, psi=None, monitor=None):
    """
    Implementable inexactness test for the subproblem: both
      f_k + psi_k <= eps_k^2 / (2 sigma_k)
      f_k + psi_k <= delta_k^2 / (2 sigma_k) * ||(w; v) - (w^k; v^k)||^2_{M_k}
    must hold. With a zero step only the first one is applied.
    """
    if psi is None:
        psi = psi_value(u_next, Subproblem(state.w, state.v, state.sigma, state.gamma, inst))
    gap = fk_value(w_next, v_next, state.w, state.v, state.sigma, state.gamma, inst) + psi
    if monitor is not None:
        monitor.last_gap = gap
        monitor.min_gap = min(monitor.min_gap, gap)
        if gap < GAP_FLOOR:
            monitor.violations += 1
            logger.warning("negative duality gap %.3e at outer iteration %d", gap, state.k)

    dw = w_next - state.w
    step_sq = dw @ dw + (state.sigma / state.gamma) * (v_next - state.v) ** 2
    ok_a = gap <= eps_k ** 2 / (2.0 * state.sigma)
    if step_sq == 0.0:
        return bool(ok_a)
    return bool(ok_a and gap <= delta_k ** 2 / (2.0 * state.sigma) * step_sq)


def sigma_gamma_update(state, cfg):
    if state.prev_rkkt1 is None or state.prev_rkkt1 == 0.0:
        ratio = 1.0
    else:
        ratio = state.last_rkkt1 / state.prev_rkkt1
    rho = cfg.rho_growth if ratio < cfg.rho_trigger else 1.0
    return min(cfg.sigma_cap, rho * state.sigma), min(cfg.sigma_cap, rho * state.gamma)


def kkt_residual_rel(w, v, y, u, inst):
    Atu = inst.A.rmatvec(u)
    margin = inst.A.matvec(w) + v
    s = float(u.sum())
    r_prox = np.linalg.norm(w - soft_threshold(w - Atu, inst.lam)) / (1.0 + np.linalg.norm(w) + np.linalg.norm(Atu))
    r_sum = abs(s) / (1.0 + abs(s))
    r_feas = np.linalg.norm(y - margin) / (1.0 + np.linalg.norm(y) + np.linalg.norm(margin))
    return KktReport(float(max(r_prox, r_sum)), float(r_feas))


def default_start(inst, cfg):
    return np.zeros(inst.n), 0.0, -cfg.u0_scale * inst.b / inst.m


def ppdna_solve(inst: ProblemInstance, init=None, cfg: PpdnaConfig = None,
                callback: Optional[Callable] = None, residual_fn: Optional[Callable] = None):
    """
    Proximal point outer loop with a semismooth Newton dual solver per
    iteration. `residual_fn(w, v, y, u)` replaces the relative KKT residual
    used for termination; `callback(record)` receives every OuterRecord.
    """
    if inst.lam <= 0:
        raise ValueError("PPDNA needs lambda > 0, got {}".format(inst.lam))
    cfg = cfg or PpdnaConfig()
    residual_fn = residual_fn or (lambda w, v, y, u: kkt_residual_rel(w, v, y, u, inst))
    timer = Timer().start()

    w, v, u = init if init is not None else default_start(inst, cfg)
    w = np.array(w, dtype=np.float64)
    u = np.array(u, dtype=np.float64)
    y = recover_y(u, inst.b)
    sigma, gamma = cfg.initial_sigma_gamma(inst.lam)
    state = OuterState(w=w, v=float(v), u=u, y=y, k=0, sigma=sigma, gamma=gamma)
    eps_schedule = get_summable_tol_func(cfg.eps_coef, cfg.eps_power)
    delta_schedule = get_summable_tol_func(cfg.delta_coef, cfg.delta_power, cap=cfg.delta_cap)

    sol = Solution(w=w, v=state.v, y=y, u=u, rkkt=residual_fn(w, state.v, y, u), outer_iters=0,
                   inner_iters_total=0, wall_time=0.0, converged=False, objective=float("nan"))
    best = (sol.rkkt.total, w, state.v, y, u, sol.rkkt)
    sol.converged = sol.rkkt.total <= cfg.tol
    monitor = GapMonitor()

    k = 0
    while not sol.converged and k < cfg.max_outer:
        sub = Subproblem(state.w, state.v, state.sigma, state.gamma, inst)
        eps_k, delta_k = eps_schedule(k + 1), delta_schedule(k + 1)

        def stop(u_j, ev):
            return inner_stop_check(ev.w, ev.v, u_j, state, eps_k, delta_k, inst, psi=ev.value, monitor=monitor)

        try:
            inner = ssn_solve(sub, state.u, cfg.ssn, stop)
            u_next, n_inner = inner.u, inner.iterations
            sol.backends.update(inner.backends)
            sol.residual_misses += inner.residual_misses
        except NewtonIterationLimit as exc:
            logger.warning("outer iteration %d: %s; continuing from the last iterate", k, exc)
            u_next, n_inner = exc.u, exc.iterations
            sol.inner_limit_hits += 1

        w, v, y = primal_update(u_next, state, inst)
        report = residual_fn(w, v, y, u_next)
        state.w, state.v, state.u, state.y = w, v, u_next, y
        state.prev_rkkt1, state.last_rkkt1 = state.last_rkkt1, report.rkkt1
        k += 1
        state.k = k
        sol.inner_iters_total += n_inner

        record = OuterRecord(k=k, inner=n_inner, gap=monitor.last_gap, rkkt1=report.rkkt1, rkkt2=report.rkkt2,
                             sigma=state.sigma, gamma=state.gamma, objective=primal_objective(w, v, inst))
        sol.history.append(record)
        logger.info("[PPDNA %3d] inner=%d rkkt1=%.2e rkkt2=%.2e sigma=%.3g obj=%.10e",
                    k, n_inner, report.rkkt1, report.rkkt2, state.sigma, record.objective)
        if callback is not None:
            timer.pause()
            callback(record)
            timer.start()

        if report.total < best[0]:
            best = (report.total, w, v, y, u_next, report)
        if report.total <= cfg.tol:
            sol.converged = True
            break
        state.sigma, state.gamma = sigma_gamma_update(state, cfg)

    _, sol.w, sol.v, sol.y, sol.u, sol.rkkt = best
    sol.outer_iters = k
    sol.gap_violations = monitor.violations
    sol.sigma, sol.gamma = state.sigma, state.gamma
    sol.objective = primal_objective(sol.w, sol.v, inst)
    sol.wall_time = timer.get_elapsed_time()
    if not sol.converged:
        logger.warning("PPDNA stopped after %d outer iterations with R_kkt=%.2e > tol=%.1e",
                       k, sol.rkkt.total, cfg.tol)
    return sol

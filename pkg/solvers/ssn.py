import logging
from collections import Counter
from dataclasses import dataclass, field, fields
from typing import Callable, List, NamedTuple, Optional

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve
from scipy.sparse.linalg import LinearOperator, cg

from problem import ProblemInstance
from utils.logistic_utils import conj_grad, conj_hess_diag, conj_value, dual_ratio, in_domain
from utils.prox_utils import soft_threshold

logger = logging.getLogger(__name__)

EPS = np.finfo(np.float64).eps


class NewtonError(RuntimeError):
    def __init__(self, message, u=None, iterations=0):
        super().__init__(message)
        self.u = u
        self.iterations = iterations


class NewtonIterationLimit(NewtonError):
    pass


class LineSearchError(NewtonError):
    pass


@dataclass
class SsnConfig:
    mu: float = 0.01
    eta: float = 0.6
    tau_bar: float = 0.1
    eta_bar: float = 0.005
    cg_abs_cap: float = 0.005
    max_newton_iters: int = 100
    max_linesearch_steps: int = 60
    smw_ratio_threshold: float = 0.5
    dense_cap: int = 4000
    grad_tol: float = 1e-11
    stall_tol: float = 1e-8
    domain_guard: float = 1e-14
    jitter: float = 1e-12

    def __post_init__(self):
        if not 0 < self.mu < 0.5:
            raise ValueError("mu must lie in (0, 1/2)")
        for name in ("eta", "tau_bar", "eta_bar"):
            if not 0 < getattr(self, name) < 1:
                raise ValueError("{} must lie in (0, 1)".format(name))
        if self.max_newton_iters < 1 or self.max_linesearch_steps < 1:
            raise ValueError("iteration limits must be positive")
        if self.smw_ratio_threshold <= 0:
            raise ValueError("smw_ratio_threshold must be positive")

    @classmethod
    def from_params(cls, params):
        return cls(**{f.name: getattr(params, f.name) for f in fields(cls) if hasattr(params, f.name)})


@dataclass
class Subproblem:
    """Dual of the proximal subproblem anchored at (w_tilde, v_tilde)."""
    w_tilde: np.ndarray
    v_tilde: float
    sigma: float
    gamma: float
    inst: ProblemInstance

    def __post_init__(self):
        if self.sigma <= 0 or self.gamma <= 0:
            raise ValueError("sigma and gamma must be positive")
        if self.w_tilde.shape != (self.inst.n,):
            raise ValueError("anchor has shape {}, expected ({},)".format(self.w_tilde.shape, self.inst.n))

    @property
    def threshold(self):
        return self.sigma * self.inst.lam


class ActiveSet(NamedTuple):
    J: np.ndarray

    @property
    def r(self):
        return int(self.J.shape[0])


class PsiEval(NamedTuple):
    """psi and the quantities shared by its gradient and the primal recovery."""
    value: float
    grad: np.ndarray
    x: np.ndarray       # w_tilde - sigma A^T u
    w: np.ndarray       # Prox_{sigma lam ||.||_1}(x), the candidate w
    v: float            # v_tilde - gamma u^T 1, the candidate v


def evaluate(u, sub):
    inst = sub.inst
    x = sub.w_tilde - sub.sigma * inst.A.rmatvec(u)
    w = soft_threshold(x, sub.threshold)
    v = sub.v_tilde - sub.gamma * u.sum()
    # ||x||^2 / 2 - E_{sigma lam ||.||_1}(x) collapses to ||Prox(x)||^2 / 2
    value = (conj_value(u, inst.b)
             + (w @ w - sub.w_tilde @ sub.w_tilde) / (2.0 * sub.sigma)
             + (v * v - sub.v_tilde * sub.v_tilde) / (2.0 * sub.gamma))
    grad = conj_grad(u, inst.b) - inst.A.matvec(w) - v
    return PsiEval(float(value), grad, x, w, float(v))


def psi_value(u, sub):
    return evaluate(u, sub).value


def psi_grad(u, sub):
    return evaluate(u, sub).grad


def active_set(u, sub, x=None):
    if x is None:
        x = sub.w_tilde - sub.sigma * sub.inst.A.rmatvec(u)
    # ties |x_i| == sigma lam stay out of J
    return ActiveSet(np.flatnonzero(np.abs(x) > sub.threshold))


def hess_apply(u, active, sub, d, hd=None, AJ=None):
    inst = sub.inst
    if hd is None:
        hd = conj_hess_diag(u, inst.b)
    out = hd * d + sub.gamma * d.sum()
    if active.r:
        if AJ is None:
            AJ = inst.A.columns(active.J)
        out += sub.sigma * AJ.matvec(AJ.rmatvec(d))
    return out


def select_backend(m, r, cfg):
    if r + 1 <= cfg.smw_ratio_threshold * m:
        return "smw"
    if m <= cfg.dense_cap:
        return "dense"
    return "cg"


def _cholesky(G, cfg):
    try:
        return cho_factor(G, lower=True, check_finite=True)
    except (LinAlgError, ValueError):
        scale = max(1.0, float(np.abs(np.diag(G)).max()))
        logger.debug("Cholesky failed, retrying with jitter %.1e", cfg.jitter * scale)
        try:
            return cho_factor(G + cfg.jitter * scale * np.eye(G.shape[0]), lower=True, check_finite=True)
        except (LinAlgError, ValueError) as exc:
            raise NewtonError("Newton system is not positive definite: {}".format(exc))


def _solve_smw(hd, AJ, sub, rhs, cfg):
    # H = D^1/2 (I + sigma W W^T) D^1/2 with W = [D^-1/2 A_J, sqrt(gamma/sigma) D^-1/2 1]
    s = 1.0 / np.sqrt(hd)
    r = AJ.shape[1]
    W = np.empty((hd.shape[0], r + 1))
    W[:, :r] = AJ * s[:, None]
    W[:, r] = np.sqrt(sub.gamma / sub.sigma) * s
    G = W.T @ W
    G[np.diag_indices_from(G)] += 1.0 / sub.sigma
    factor = _cholesky(G, cfg)
    z = s * rhs
    z = z - W @ cho_solve(factor, W.T @ z)
    return s * z, lambda res: s * _smw_apply(W, factor, s * res)


def _smw_apply(W, factor, z):
    return z - W @ cho_solve(factor, W.T @ z)


def _solve_dense(hd, AJ, sub, rhs, cfg):
    H = sub.sigma * (AJ @ AJ.T) if AJ.shape[1] else np.zeros((hd.shape[0], hd.shape[0]))
    H += sub.gamma
    H[np.diag_indices_from(H)] += hd
    factor = _cholesky(H, cfg)
    return cho_solve(factor, rhs), lambda res: cho_solve(factor, res)


class NewtonStep(NamedTuple):
    d: np.ndarray
    backend: str
    residual: float
    bound: float


def newton_direction(u, active, sub, cg_tol, cfg=None, grad=None, backend=None):
    """
    Approximately solves (grad^2 h*(u) + sigma A_J A_J^T + gamma 1 1^T) d = -grad psi(u).
    """
    cfg = cfg or SsnConfig()
    inst = sub.inst
    g = psi_grad(u, sub) if grad is None else grad
    hd = conj_hess_diag(u, inst.b)
    m = u.shape[0]
    if backend is None:
        backend = select_backend(m, active.r, cfg)

    AJ = inst.A.columns(active.J)
    if backend == "cg":
        op = LinearOperator((m, m), matvec=lambda d: hess_apply(u, active, sub, d, hd=hd, AJ=AJ), dtype=np.float64)
        d, info = cg(op, -g, rtol=0.0, atol=cg_tol, maxiter=10 * m)
        if info < 0 or not np.all(np.isfinite(d)):
            raise NewtonError("conjugate gradients broke down (info={})".format(info))
        if info > 0:
            logger.debug("CG stopped at maxiter before reaching %.1e", cg_tol)
    else:
        solve = _solve_smw if backend == "smw" else _solve_dense
        d, apply_inverse = solve(hd, AJ.toarray(), sub, -g, cfg)
        res = hess_apply(u, active, sub, d, hd=hd, AJ=AJ) + g
        if np.linalg.norm(res) > cg_tol:
            # one step of iterative refinement on the existing factorization
            d = d - apply_inverse(res)

    if not np.all(np.isfinite(d)):
        raise NewtonError("non-finite Newton direction")
    residual = float(np.linalg.norm(hess_apply(u, active, sub, d, hd=hd, AJ=AJ) + g))
    return NewtonStep(d, backend, residual, cg_tol)


def line_search(u, d, sub, cfg=None, current=None):
    """
    Armijo backtracking alpha = eta^c, keeping u + alpha d strictly inside dom h*.
    Returns (alpha, evaluation at the new point, backtracks).
    """
    cfg = cfg or SsnConfig()
    current = current or evaluate(u, sub)
    slope = float(current.grad @ d)
    slack = 1e2 * EPS * max(1.0, abs(current.value))
    alpha = 1.0
    for c in range(cfg.max_linesearch_steps + 1):
        trial = u + alpha * d
        if in_domain(trial, sub.inst.b, guard=cfg.domain_guard):
            ev = evaluate(trial, sub)
            if ev.value <= current.value + cfg.mu * alpha * slope + slack:
                return alpha, ev, c
        alpha *= cfg.eta
    raise LineSearchError("no acceptable step after {} backtracks".format(cfg.max_linesearch_steps), u=u)


@dataclass
class SsnResult:
    u: np.ndarray
    iterations: int
    last: PsiEval
    backends: Counter = field(default_factory=Counter)
    backtracks: int = 0
    residual_misses: int = 0
    stalled: bool = False
    grad_norms: List[float] = field(default_factory=list)
    psi_values: List[float] = field(default_factory=list)
    domain_ok: bool = True


def ssn_solve(sub, u0, cfg=None, stop: Optional[Callable] = None):
    """
    Semismooth Newton on psi. `stop(u, ev)` is checked before every step;
    iteration also ends once ||grad psi|| <= cfg.grad_tol.
    """
    cfg = cfg or SsnConfig()
    u = np.array(u0, dtype=np.float64)
    dual_ratio(u, sub.inst.b)
    ev = evaluate(u, sub)
    result = SsnResult(u=u, iterations=0, last=ev)

    for j in range(cfg.max_newton_iters + 1):
        gnorm = float(np.linalg.norm(ev.grad))
        result.grad_norms.append(gnorm)
        result.psi_values.append(ev.value)
        result.u, result.iterations, result.last = u, j, ev
        if (stop is not None and stop(u, ev)) or gnorm <= cfg.grad_tol:
            return result
        if j == cfg.max_newton_iters:
            break

        active = active_set(u, sub, x=ev.x)
        tol = min(cfg.eta_bar, gnorm ** (1.0 + cfg.tau_bar))
        step = newton_direction(u, active, sub, min(tol, cfg.cg_abs_cap), cfg=cfg, grad=ev.grad)
        result.backends[step.backend] += 1
        if step.residual > max(tol, 1e2 * EPS * gnorm):
            result.residual_misses += 1
            logger.debug("Newton residual %.2e above bound %.2e", step.residual, tol)
        try:
            alpha, ev, backtracks = line_search(u, step.d, sub, cfg, current=ev)
        except LineSearchError:
            if gnorm <= cfg.stall_tol:
                result.stalled = True
                logger.debug("SSN stalled at ||grad||=%.2e", gnorm)
                return result
            raise
        result.backtracks += backtracks
        u = u + alpha * step.d
        result.domain_ok &= in_domain(u, sub.inst.b, guard=cfg.domain_guard)
        logger.debug("ssn j=%d psi=%.10e ||grad||=%.2e r=%d alpha=%.3g %s",
                     j, ev.value, gnorm, active.r, alpha, step.backend)

    raise NewtonIterationLimit("SSN hit {} iterations (||grad||={:.2e})".format(cfg.max_newton_iters, gnorm),
                               u=u, iterations=cfg.max_newton_iters)

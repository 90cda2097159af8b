import logging
import math
from dataclasses import dataclass, fields
from typing import NamedTuple

import numpy as np

from problem import ProblemInstance
from solvers.ppdna import KktReport, kkt_residual_rel
from utils.logistic_utils import logistic_loss, logistic_loss_grad
from utils.prox_utils import soft_threshold

logger = logging.getLogger(__name__)


class BaselineError(RuntimeError):
    pass


@dataclass
class BaselineConfig:
    tol: float = 1e-8
    max_iters: int = 200000
    step0: float = 0.0          # 0 means 1 / L with L = (||A||_F^2 + m) / (4m)
    backtrack: float = 0.5
    log_every: int = 1000

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be positive")
        if not 0 < self.backtrack < 1:
            raise ValueError("backtrack must lie in (0, 1)")
        if self.step0 < 0:
            raise ValueError("step0 must be positive (or 0 for the default)")

    @classmethod
    def from_params(cls, params):
        return cls(**{f.name: getattr(params, f.name) for f in fields(cls) if hasattr(params, f.name)})


class BaselineSolution(NamedTuple):
    w: np.ndarray
    v: float
    objective: float
    iterations: int
    rkkt: KktReport


def _smooth(w, v, inst):
    x = inst.A.matvec(w) + v
    return logistic_loss(x, inst.b), x


def _kkt(w, v, x, inst):
    u = logistic_loss_grad(x, inst.b)
    return kkt_residual_rel(w, v, x, u, inst)


def prox_grad_solve(inst: ProblemInstance, cfg: BaselineConfig = None, init=None):
    """
    Accelerated proximal gradient on (w, v): a gradient step on h(Aw + v1),
    soft thresholding on w and the identity prox on v. The step shrinks by
    cfg.backtrack until the quadratic upper bound holds; momentum restarts
    whenever the objective would increase, so accepted objectives are monotone.
    Stops once the relative KKT residual with u = grad h(Aw + v1) is <= tol.
    """
    if inst.lam < 0:
        raise ValueError("lambda must be nonnegative, got {}".format(inst.lam))
    cfg = cfg or BaselineConfig()
    m = inst.m
    step = cfg.step0 or 4.0 * m / (inst.A.frobenius_sq() + m)

    if init is None:
        w, v = np.zeros(inst.n), 0.0
    else:
        w, v = np.array(init[0], dtype=np.float64), float(init[1])
    f, x = _smooth(w, v, inst)
    obj = f + inst.lam * np.abs(w).sum()
    w_prev, v_prev = w, v
    zw, zv = w, v
    t = 1.0

    for it in range(cfg.max_iters):
        report = _kkt(w, v, x, inst)
        if report.total <= cfg.tol:
            logger.debug("proximal gradient converged in %d iterations (R_kkt=%.2e)", it, report.total)
            return BaselineSolution(w, float(v), float(obj), it, report)
        if cfg.log_every and it % cfg.log_every == 0:
            logger.debug("[PG %6d] obj=%.12e rkkt=%.2e step=%.3g", it, obj, report.total, step)

        fz, xz = _smooth(zw, zv, inst)
        g = logistic_loss_grad(xz, inst.b)
        gw, gv = inst.A.rmatvec(g), float(g.sum())
        while True:
            w_new = soft_threshold(zw - step * gw, step * inst.lam)
            v_new = zv - step * gv
            dw, dv = w_new - zw, v_new - zv
            f_new, x_new = _smooth(w_new, v_new, inst)
            bound = fz + gw @ dw + gv * dv + (dw @ dw + dv * dv) / (2.0 * step)
            if f_new <= bound + 1e2 * np.finfo(np.float64).eps * max(1.0, abs(fz)):
                break
            step *= cfg.backtrack
            if step < 1e-20:
                raise BaselineError("step size underflow at iteration {}".format(it))

        obj_new = f_new + inst.lam * np.abs(w_new).sum()
        if obj_new > obj and t > 1.0:
            # restart from the last accepted point without momentum
            zw, zv, t = w, v, 1.0
            continue

        t_new = (1.0 + math.sqrt(1.0 + 4.0 * t * t)) / 2.0
        coeff = (t - 1.0) / t_new
        w_prev, v_prev = w, v
        w, v, x, obj = w_new, v_new, x_new, obj_new
        zw = w + coeff * (w - w_prev)
        zv = v + coeff * (v - v_prev)
        t = t_new

    raise BaselineError("proximal gradient did not reach tol={:.1e} in {} iterations".format(cfg.tol, cfg.max_iters))

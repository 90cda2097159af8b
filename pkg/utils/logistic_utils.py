import numpy as np
from scipy.special import expit, xlogy

from problem.design_matrix import as_design_matrix


# u_i * b_i must stay this far inside (-1/m, 0), in units of 1/m
DOMAIN_GUARD = 1e-15


class DomainError(ValueError):
    pass


def _check_lengths(x, b):
    if x.shape != b.shape:
        raise ValueError("length mismatch: {} vs {}".format(x.shape, b.shape))


def dual_ratio(u, b, guard=DOMAIN_GUARD):
    """
    Returns t = -m * u * b, which lies in (0, 1) exactly when u is in dom h*.
    Every conjugate quantity is a simple function of t.
    """
    u = np.asarray(u, dtype=np.float64)
    _check_lengths(u, b)
    t = -u.shape[0] * u * b
    if not np.all((t > guard) & (t < 1.0 - guard)):
        bad = int(np.count_nonzero(~((t > guard) & (t < 1.0 - guard))))
        raise DomainError("{} of {} dual entries outside dom h*".format(bad, t.shape[0]))
    return t


def in_domain(u, b, guard=DOMAIN_GUARD):
    t = -u.shape[0] * u * b
    return bool(np.all((t > guard) & (t < 1.0 - guard)))


def logistic_loss(x, b):
    # log(1 + exp(-b x)) without overflow
    x = np.asarray(x, dtype=np.float64)
    _check_lengths(x, b)
    return np.logaddexp(0.0, -b * x).mean()


def logistic_loss_grad(x, b):
    x = np.asarray(x, dtype=np.float64)
    _check_lengths(x, b)
    return -b * expit(-b * x) / x.shape[0]


def conj_value(u, b):
    # h*(u) = (1/m) sum t log t + (1 - t) log(1 - t)
    t = dual_ratio(u, b)
    return (xlogy(t, t) + xlogy(1.0 - t, 1.0 - t)).mean()


def conj_grad(u, b):
    t = dual_ratio(u, b)
    return b * (np.log1p(-t) - np.log(t))


def conj_hess_diag(u, b):
    t = dual_ratio(u, b)
    return u.shape[0] / (t * (1.0 - t))


def recover_y(u, b):
    # the margin y with grad h(y) = u
    return conj_grad(u, b)


def primal_objective(w, v, inst):
    x = inst.A.matvec(w) + v
    return logistic_loss(x, inst.b) + inst.lam * np.abs(w).sum()


def dual_objective(u, inst):
    return -conj_value(u, inst.b)


def intercept_only(b):
    m_pos = int(np.count_nonzero(b > 0))
    m_neg = b.shape[0] - m_pos
    if m_pos == 0 or m_neg == 0:
        raise ValueError("both classes must be present (m+={}, m-={})".format(m_pos, m_neg))
    if m_pos == m_neg:
        return 0.0
    return float(np.log(m_pos / m_neg))


def lambda_max(A, b):
    """
    Smallest lambda for which w = 0 is optimal, with the intercept at
    log(m+/m-). The residual 1 - p_log(v, 0) is weighted by the labels, so the
    value is the sup-norm of the loss gradient at (0, v).
    """
    A = as_design_matrix(A)
    v = intercept_only(b)
    p = expit(b * v)
    return float(np.abs(A.rmatvec(b * (1.0 - p))).max() / b.shape[0])

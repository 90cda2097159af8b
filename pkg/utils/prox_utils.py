import numpy as np


def soft_threshold(x, t):
    """
    Proximal map of t * ||.||_1: sign(x) * max(|x| - t, 0).
    Entries with |x_i| == t map to exactly 0.
    """
    if t < 0:
        raise ValueError("threshold must be nonnegative, got {}".format(t))
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)


def weighted_soft_threshold(x, s):
    # proximal map of s^T |.|
    s = np.asarray(s, dtype=np.float64)
    if s.shape != np.shape(x):
        raise ValueError("weight length mismatch: {} vs {}".format(s.shape, np.shape(x)))
    if not np.all(s > 0):
        raise ValueError("weights must be positive")
    return np.sign(x) * np.maximum(np.abs(x) - s, 0.0)


def moreau_env_l1(x, t):
    """
    Moreau envelope of t * ||.||_1 at x, a Huber function per coordinate:
    x_i^2 / 2 where |x_i| <= t, t |x_i| - t^2 / 2 elsewhere.
    Its gradient is x - soft_threshold(x, t).
    """
    if t < 0:
        raise ValueError("threshold must be nonnegative, got {}".format(t))
    ax = np.abs(x)
    return float(np.where(ax <= t, 0.5 * ax * ax, t * ax - 0.5 * t * t).sum())


def moreau_env_l1_grad(x, t):
    return x - soft_threshold(x, t)


def support(w, threshold=0.0):
    return np.flatnonzero(np.abs(w) > threshold)

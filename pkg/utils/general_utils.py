import logging
import os
import random

import numpy as np

LOG_LEVEL_ENV = "PPDNA_LOG_LEVEL"


def get_summable_tol_func(coef, power, cap=None):
    """
    Summable tolerance schedule k -> coef / k^power for k >= 1, optionally
    clamped from above by `cap` (used to keep delta_k < 1 for small k).
    :return HoF which takes the 1-based outer iteration k as input
    """
    if power <= 1.0:
        raise ValueError("power must exceed 1 for a summable schedule, got {}".format(power))

    def helper(k):
        if k < 1:
            raise ValueError("schedule index starts at 1, got {}".format(k))
        value = coef / float(k) ** power
        if cap is not None:
            value = min(value, cap)
        return value

    return helper


def setup_seed(seed):
    np.random.seed(seed)
    random.seed(seed)


def safe_state(silent, seed=0):
    """
    Seeds the RNGs and configures logging with timestamped records; the level
    comes from $PPDNA_LOG_LEVEL unless `silent` forces warnings only.
    """
    level = os.environ.get(LOG_LEVEL_ENV, "INFO").upper()
    if silent:
        level = "WARNING"
    logging.basicConfig(
        level=getattr(logging, level, logging.INFO),
        format="%(message)s [%(asctime)s]",
        datefmt="%d/%m %H:%M:%S",
        force=True,
    )
    setup_seed(seed)

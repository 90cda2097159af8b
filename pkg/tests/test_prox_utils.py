import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from utils.prox_utils import moreau_env_l1, moreau_env_l1_grad, soft_threshold, support, weighted_soft_threshold


def test_soft_threshold_values_and_ties():
    assert_array_equal(soft_threshold(np.array([3.0, -0.5, 1.0, -2.5]), 1.0), [2.0, 0.0, 0.0, -1.5])


def test_soft_threshold_zero_is_identity(rng):
    x = rng.standard_normal(7)
    assert_array_equal(soft_threshold(x, 0.0), x)


def test_negative_threshold_raises():
    with pytest.raises(ValueError):
        soft_threshold(np.ones(2), -1.0)
    with pytest.raises(ValueError):
        moreau_env_l1(np.ones(2), -1.0)


def test_weighted_threshold_reduces_to_scalar(rng):
    x = rng.standard_normal(9)
    assert_array_equal(weighted_soft_threshold(x, np.full(9, 0.3)), soft_threshold(x, 0.3))
    with pytest.raises(ValueError):
        weighted_soft_threshold(x, np.zeros(9))
    with pytest.raises(ValueError):
        weighted_soft_threshold(x, np.ones(3))


def test_moreau_envelope_is_huber():
    assert moreau_env_l1(np.array([0.5, 2.0, -3.0]), 1.0) == pytest.approx(0.125 + 1.5 + 2.5)


def test_moreau_envelope_gradient(rng):
    x = 2.0 * rng.standard_normal(11)
    t = 0.7
    h = 1e-6
    fd = np.array([(moreau_env_l1(x + h * e, t) - moreau_env_l1(x - h * e, t)) / (2 * h) for e in np.eye(11)])
    assert_allclose(moreau_env_l1_grad(x, t), fd, atol=1e-6)


def test_moreau_identity(rng):
    # E(x) = t ||prox(x)||_1 + ||prox(x) - x||^2 / 2
    x = 2.0 * rng.standard_normal(13)
    t = 0.4
    p = soft_threshold(x, t)
    assert moreau_env_l1(x, t) == pytest.approx(t * np.abs(p).sum() + 0.5 * np.sum((p - x) ** 2))


def test_support_threshold():
    w = np.array([0.0, 1e-9, -0.5, 2e-8])
    assert_array_equal(support(w), [1, 2, 3])
    assert_array_equal(support(w, 1e-8), [2, 3])

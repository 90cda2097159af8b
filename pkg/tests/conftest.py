import numpy as np
import pytest
from scipy import sparse

from problem import ProblemInstance
from problem.dataset_readers import synth_gen
from utils.logistic_utils import lambda_max


def random_problem(rng, m, n, density=0.5, frac=0.1):
    A = sparse.random(m, n, density=density, random_state=rng, data_rvs=rng.standard_normal, format="csr")
    b = np.where(np.arange(m) % 2 == 0, 1.0, -1.0)
    rng.shuffle(b)
    return ProblemInstance(A, b, frac * lambda_max(A, b))


def dual_point(rng, b, lo=0.05, hi=0.95):
    return -b * rng.uniform(lo, hi, size=b.shape[0]) / b.shape[0]


@pytest.fixture
def rng():
    return np.random.Generator(np.random.Philox(20240611))


@pytest.fixture
def small_instance(rng):
    return random_problem(rng, 30, 60, frac=0.1)


@pytest.fixture
def tiny_dense():
    A = np.array([[1.0, 0.5, -1.0],
                  [0.0, 2.0, 1.0],
                  [-1.0, 0.0, 0.5],
                  [2.0, -1.0, 0.0],
                  [0.5, 1.0, 1.0]])
    b = np.array([1.0, -1.0, 1.0, 1.0, -1.0])
    return ProblemInstance(A, b, 0.1 * lambda_max(A, b))


@pytest.fixture(scope="session")
def case1():
    return synth_gen(200, 5000, seed=1)

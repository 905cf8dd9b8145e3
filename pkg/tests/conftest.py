import numpy as np
import pytest

from nastya.problems import quadratic_problem_from_parts


@pytest.fixture
def two_quadratics():
    """M=2, n=1, d=1 reference: samples x^2/2 and (x-2)^2/2, optimum at 1."""
    hessians = np.ones((2, 1, 1, 1))
    centers = np.array([[[0.0]], [[2.0]]])
    return quadratic_problem_from_parts(hessians, centers)


@pytest.fixture
def rng():
    return np.random.Generator(np.random.Philox(key=np.array([42, 0], dtype=np.uint64)))


def random_psd_quadratic(rng, M, n, d):
    base = rng.normal(size=(M, n, d, d))
    hessians = base @ base.transpose(0, 1, 3, 2) + 0.5 * np.eye(d)
    centers = rng.normal(size=(M, n, d))
    return quadratic_problem_from_parts(hessians, centers)

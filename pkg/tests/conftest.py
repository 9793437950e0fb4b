import numpy as np
import pytest

from concavefp import lte
from concavefp.mapping import PositiveConcaveMapping


def affine(b, A, name="affine"):
    b = np.asarray(b, float)
    A = np.asarray(A, float)
    return PositiveConcaveMapping(lambda x: b + A @ x, len(b), name=name)


def sqrt_log():
    return PositiveConcaveMapping(
        lambda x: np.array([np.sqrt(x[0]) + x[1] + 1.0, 0.5 * x[0] + np.log1p(x[1]) + 1.0]),
        2,
        name="sqrt_log",
    )


def kinked3():
    """Includes a non-differentiable ``min`` term and a saturating term."""
    return PositiveConcaveMapping(
        lambda x: np.array(
            [
                1.0 + 0.3 * x[1] + np.sqrt(1.0 + x[2]),
                2.0 + 0.2 * x[0] + 0.1 * x[2] + np.log1p(x[0]),
                0.5 + 0.25 * x[0] + 0.25 * x[1] + 0.1 * min(x[0], x[1]) + x[2] / (1.0 + x[2]),
            ]
        ),
        3,
        name="kinked3",
    )


def scalar_sqrt():
    return PositiveConcaveMapping(lambda x: np.sqrt(x) + 1.0, 1, name="sqrt")


# (mapping factory, exact lower bounding matrix)
SYNTHETIC_CORPUS = {
    "affine2": (lambda: affine([1.0, 0.5], [[0.2, 0.3], [0.1, 0.4]]), np.array([[0.2, 0.3], [0.1, 0.4]])),
    "sqrt_log": (sqrt_log, np.array([[0.0, 1.0], [0.5, 0.0]])),
    "kinked3": (kinked3, np.array([[0.0, 0.3, 0.0], [0.2, 0.0, 0.1], [0.25, 0.25, 0.0]])),
    "scalar_sqrt": (scalar_sqrt, np.array([[0.0]])),
}


def small_params(**kw):
    base = dict(n_bs=4, n_users=30, field_size=1000.0)
    base.update(kw)
    return lte.RadioParams(**base)


@pytest.fixture(scope="session")
def small_scenario():
    return lte.generate_scenario(small_params(), np.random.default_rng(11))


@pytest.fixture(scope="session")
def table1_scenario():
    return lte.generate_scenario(lte.RadioParams(), np.random.default_rng(2024))


@pytest.fixture(scope="session")
def hand_scenario():
    """Two stations, two users, hand-set gains."""
    r = lte.RadioParams()
    return lte.NetworkScenario(
        gains=np.array([[2e-10, 3e-12], [5e-12, 8e-11]]),
        assignment=[0, 1],
        demands=[768e3, 512e3],
        K=r.K,
        B=r.B,
        sigma2=r.sigma2,
        p=[1.6, 0.8],
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)

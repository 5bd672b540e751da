import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_orthonormal(rng, n, p):
    Q, _ = np.linalg.qr(rng.standard_normal((n, p)))
    return Q

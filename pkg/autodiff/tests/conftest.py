# autodiff/tests/conftest.py
import numpy as np
import pytest

from autodiff.params import ParamSet
from autodiff.tensor import Tensor


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def leaf(rng, *shape, scale=1.0):
    return Tensor(rng.normal(scale=scale, size=shape).astype(np.float64), requires_grad=True)


@pytest.fixture
def make_leaf(rng):
    """Hoja float64 aleatoria con requires_grad."""
    return lambda *shape, scale=1.0: leaf(rng, *shape, scale=scale)


@pytest.fixture
def mlp_params(rng):
    """MLP 1-8-1 pequeña en float64 para las pruebas de segundo orden."""
    return ParamSet(
        [
            ("fc1.weight", leaf(rng, 8, 1, scale=0.7)),
            ("fc1.bias", leaf(rng, 8, scale=0.1)),
            ("fc2.weight", leaf(rng, 1, 8, scale=0.4)),
            ("fc2.bias", leaf(rng, 1, scale=0.1)),
        ]
    )

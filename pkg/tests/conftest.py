"""
Fixtures compartilhadas: planta escalar S1, presets e instâncias aleatórias
"""

import numpy as np
import pytest

from core.benchmarks import preset
from core.linalg import spectral_abscissa
from core.lqr import Plant, closed_loop


@pytest.fixture
def s1():
    """A = −1, B = Q = R = Σ = 1"""
    return Plant.create(A=-1.0, B=1.0, Q=1.0, R=1.0, Sigma=1.0)


@pytest.fixture(scope="session")
def path20():
    return preset("path20")


@pytest.fixture(scope="session")
def lollipop():
    return preset("lollipop10_10")


def _spd(rng, n, shift):
    F = rng.standard_normal((n, n))
    return F @ F.T / n + shift * np.eye(n)


def random_instance(rng, n=None, m=None):
    """Planta aleatória com A Hurwitz e um ganho estabilizante K"""
    n = n or int(rng.integers(1, 7))
    m = m or int(rng.integers(1, n + 1))
    G = rng.standard_normal((n, n)) / np.sqrt(n)
    A = G - (spectral_abscissa(G) + 0.5) * np.eye(n)
    p = Plant.create(
        A=A,
        B=rng.standard_normal((n, m)),
        Q=_spd(rng, n, 0.2),
        R=_spd(rng, m, 0.5),
        Sigma=_spd(rng, n, 0.5),
    )
    K = 0.3 * rng.standard_normal((m, n))
    while spectral_abscissa(closed_loop(p, K)) > -0.1:
        K *= 0.5
    return p, K


@pytest.fixture
def rng():
    return np.random.default_rng(20240521)


@pytest.fixture
def instance_factory():
    return random_instance

import numpy as np
import pytest

from subband_wiener.bank import Bank
from subband_wiener.stochastic import SignalModel


def random_ar(rng, max_order=3, max_radius=0.9):
    """Stable AR model built from random poles inside ``max_radius``."""
    p = int(rng.integers(1, max_order + 1))
    poles = []
    while len(poles) < p:
        rad = rng.uniform(0.05, max_radius)
        if p - len(poles) >= 2 and rng.random() < 0.5:
            z = rad * np.exp(1j * rng.uniform(0.2, np.pi - 0.2))
            poles += [z, np.conj(z)]
        else:
            poles.append(rad * rng.choice([-1, 1]))
    a = -np.real(np.poly(poles))[1:]
    return SignalModel.ar(a)


def random_bank(rng, M=None, L=None, Q=None):
    M = M or int(rng.integers(1, 5))
    L = L or int(rng.integers(1, 5))
    Q = Q or int(rng.integers(1, 7))
    return Bank.from_filters([rng.standard_normal(Q) for _ in range(L)], M)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)

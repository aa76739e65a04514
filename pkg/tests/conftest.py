import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def kron_chain(mats):
    out = mats[0]
    for m in mats[1:]:
        out = np.kron(out, m)
    return out

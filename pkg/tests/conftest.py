import numpy as np
import pytest

from projvol.rng import RngState


@pytest.fixture
def gen():
    """Fresh deterministic generator per test."""
    return RngState(987).generator()


def unit(v):
    v = np.asarray(v, dtype=np.float64)
    return v / np.linalg.norm(v)


def random_unit(rng, d):
    return unit(rng.standard_normal(d))

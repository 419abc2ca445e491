from fractions import Fraction

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from bmgeom.grid import GridSet

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

H_VALUES = (Fraction(1), Fraction(1, 2), Fraction(1, 4))


@st.composite
def grid_sets(draw, dim=None, max_side=6, nonempty=True, h=None):
    d = draw(st.sampled_from((1, 2, 3))) if dim is None else dim
    shape = draw(st.tuples(*[st.integers(1, max_side)] * d))
    n = int(np.prod(shape))
    bits = draw(st.lists(st.booleans(), min_size=n, max_size=n))
    mask = np.array(bits, dtype=bool).reshape(shape)
    if nonempty and not mask.any():
        mask.flat[0] = True
    lo = draw(st.tuples(*[st.integers(-5, 5)] * d))
    hh = draw(st.sampled_from(H_VALUES)) if h is None else h
    return GridSet(mask, lo, hh)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def cells_set(G):
    return {tuple(int(v) for v in c) for c in G.cells()}

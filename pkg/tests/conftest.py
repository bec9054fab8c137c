import numpy as np
import pytest
from hypothesis import settings

from octok.geometry import Frame, GridSpec, Site

settings.register_profile("ci", max_examples=200, deadline=None)
settings.register_profile("fast", max_examples=20, deadline=None)
settings.load_profile("ci")


def make_frame(points, types=None, frame_index=0):
    types = types or [6] * len(points)
    return Frame(tuple(Site(t, tuple(map(float, p))) for t, p in zip(types, points)), frame_index)


@pytest.fixture
def unit_spec():
    """origin 0, leaf 0.24, L=3 (c0 = 0.96)."""
    return GridSpec(origin=(0.0, 0.0, 0.0), L=3, c_leaf=0.24, c_r=0.01)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)

import numpy as np
import pytest
from hypothesis import settings

from transversal.constants import EstimatorConfig
from transversal.projections import AffineSubspace, Ball, FiniteUnion, Polyhedron

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


def line(theta, base=(0.0, 0.0)):
    return AffineSubspace(base, [[np.cos(theta), np.sin(theta)]])


@pytest.fixture
def x_axis():
    return line(0.0)


@pytest.fixture
def y_axis():
    return line(np.pi / 2)


@pytest.fixture
def diag45():
    return line(np.pi / 4)


@pytest.fixture
def halfplanes():
    return Polyhedron([[0, 1]], [0]), Polyhedron([[0, -1]], [0])


@pytest.fixture
def tangent_balls():
    return Ball([0, -1], 1), Ball([0, 1], 1)


@pytest.fixture
def axes_union():
    return FiniteUnion([line(0.0), line(np.pi / 2)])


@pytest.fixture
def small_cfg():
    """Cheap schedule for unit tests; the battery uses the full one."""
    return EstimatorConfig(radii=(0.5, 0.25, 0.125, 0.0625), samples_per_radius=100)

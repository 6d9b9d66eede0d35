import math

import pytest

from fsoirs import scenario
from fsoirs.beam import BeamSpec
from fsoirs.geometry import AnglePair
from fsoirs.irs2d import LinkGeometry2D
from fsoirs.irs3d import LinkGeometry3D

LAMBDA = 1550e-9
PI = math.pi


@pytest.fixture
def geom2d():
    """Default 2D link: 400 m to the IRS, 500 m to the lens."""
    return LinkGeometry2D(d_sr=400.0, d_rl=500.0, theta_i=PI / 6, theta_r=PI / 5,
                          theta_rl=PI / 6, a_r=0.1, a_l=0.025)


@pytest.fixture
def geom3d():
    return LinkGeometry3D(d_sr=400.0, d_rl=500.0, psi_i=AnglePair(PI / 6, 0.0),
                          psi_r=AnglePair(PI / 5, 7 * PI / 8), theta_rl=PI / 6, a_l=0.025)


@pytest.fixture
def spec_1mm():
    return BeamSpec(LAMBDA, 1e-3)


@pytest.fixture(scope="session")
def table1_2d():
    return scenario.load("table1-2d")


@pytest.fixture(scope="session")
def table1_3d():
    return scenario.load("table1-3d")

import pytest

from navier_blowup import asymptotics
from navier_blowup.greens import BallDomain


@pytest.fixture(scope="session")
def unit_ball():
    return BallDomain()


@pytest.fixture(scope="session")
def sweep(unit_ball):
    """Default sweep on the unit ball: rows, solutions, fits."""
    return asymptotics.run_sweep_detailed(asymptotics.DEFAULT_SWEEP, unit_ball)

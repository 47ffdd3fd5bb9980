import pytest

from twistdirac.symexpr import Chart, OracleConfig


@pytest.fixture
def phase():
    return Chart("phase", ["q1", "q2", "q3", "p1", "p2", "p3"])


@pytest.fixture
def cfg():
    return OracleConfig(seed=20110227, samples=64)

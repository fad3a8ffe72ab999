import pytest

from src.core.connection import random_connection
from src.core.lie_core import standard_r
from src.core.poisson_bracket import RMatrixAssignment
from src.core.ribbon_graph import named_graph


@pytest.fixture
def torus():
    return named_graph("torus")


@pytest.fixture
def double():
    return named_graph("double")


@pytest.fixture
def loop():
    return named_graph("loop")


@pytest.fixture
def single_edge():
    return named_graph("single_edge")


@pytest.fixture
def r2():
    return standard_r(2)


@pytest.fixture
def torus_connection(torus):
    return random_connection(torus, 2, seed=7)


@pytest.fixture
def torus_assignment(torus, r2):
    return RMatrixAssignment.uniform(torus, r2)

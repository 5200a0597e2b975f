"""
テスト共通設定
"""
import numpy as np
import pytest

from src.core.logger import setup_logging
from src.factorial.dataset import Dataset


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run slow Monte Carlo tests")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(scope="session", autouse=True)
def quiet_logging():
    setup_logging("WARNING")


@pytest.fixture
def shifted_pair():
    """(0,1,2) と (1,2,3) の二群"""
    return Dataset.from_groups([[0, 1, 2], [1, 2, 3]])


@pytest.fixture
def separated_pair():
    """{1,2} と {3,4} の二群"""
    return Dataset.from_groups([[1, 2], [3, 4]])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)

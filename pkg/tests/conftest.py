import numpy as np
import pytest

from veech_lab.charts import build_chart
from veech_lab.origami import RationalDirection, builtin
from veech_lab.spines import SpineForest

HORIZONTAL = RationalDirection(1, 0)
VERTICAL = RationalDirection(0, 1)


def philox(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


@pytest.fixture(scope="session")
def silver():
    return builtin("silver-L")


@pytest.fixture(scope="session")
def chart10(silver):
    return build_chart(silver, radius=10, lazy=True)


@pytest.fixture(scope="session")
def chart3(silver):
    return build_chart(silver, radius=3)


@pytest.fixture(scope="session")
def forest_h(silver):
    return SpineForest(build_chart(silver, radius=4, lazy=True), HORIZONTAL)


@pytest.fixture(scope="session")
def forest_small(silver):
    return SpineForest(build_chart(silver, radius=2, lazy=True), HORIZONTAL)

import random

import pytest

from msovc.structures import enumerate_trees


@pytest.fixture
def rng():
    return random.Random(12345)


@pytest.fixture(scope="session")
def trees4():
    return list(enumerate_trees(4, ["a", "b"]))

from fractions import Fraction as F

import pytest
from hypothesis import HealthCheck, settings

from enlargement_lab.random_times import RandomTime
from enlargement_lab.rational import INF
from enlargement_lab.space import build_space

settings.register_profile(
    "default", max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

COIN = {
    "grid": ["0", "1"],
    "atoms": [{"id": "a", "p": "1/2"}, {"id": "b", "p": "1/2"}],
    "partitions": [[["a", "b"]], [["a"], ["b"]]],
}

TRIVIAL = {
    "grid": ["0", "2"],
    "atoms": [{"id": "w", "p": "1"}],
    "partitions": [[["w"]], [["w"]]],
}


@pytest.fixture
def coin():
    return build_space(COIN)


@pytest.fixture
def trivial():
    return build_space(TRIVIAL)


@pytest.fixture
def mixture():
    """Half a point mass at 1, half uniform on [0, 2]."""
    return RandomTime.from_law({"w": ([(F(1), F(1, 2))], [(F(0), F(2), F(1, 4))])})


@pytest.fixture
def coin_external(coin):
    """Independent fair coin: 1 or never, on both atoms."""
    law = ([(F(1), F(1, 2)), (INF, F(1, 2))], [])
    return RandomTime.from_law({"a": law, "b": law})


@pytest.fixture
def coin_hidden(coin):
    """Independent fair coin choosing between times 1 and 2; not honest."""
    law = ([(F(1), F(1, 2)), (F(2), F(1, 2))], [])
    return RandomTime.from_law({"a": law, "b": law})

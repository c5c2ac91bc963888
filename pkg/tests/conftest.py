import pytest

from _synth import leaky_dataset, permuted_labels, replacement_pool


@pytest.fixture(scope="session")
def leaky():
    return leaky_dataset(seed=7)


@pytest.fixture(scope="session")
def control(leaky):
    return permuted_labels(leaky, seed=11)


@pytest.fixture(scope="session")
def pool():
    return replacement_pool(seed=23)

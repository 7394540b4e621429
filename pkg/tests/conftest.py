import pytest

from kspace.instances import builtin_t3, load_instance


@pytest.fixture(scope="session")
def t3():
    return load_instance(builtin_t3())


@pytest.fixture(scope="session")
def t3_universe(t3):
    return t3.universe


def fs(*ids):
    return frozenset(ids)

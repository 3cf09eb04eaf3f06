import random

import pytest

from sleepspike.curves import get_curve


@pytest.fixture(scope="session")
def toy():
    return get_curve("toy16")


@pytest.fixture(scope="session")
def p128():
    return get_curve("secp128r1")


@pytest.fixture(scope="session")
def p256():
    return get_curve("p256")


@pytest.fixture()
def rng():
    return random.Random(0xC0FFEE)

import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from blowuplab.profiles import get_correction, get_profile4  # noqa: E402


@pytest.fixture(scope="session")
def profile4():
    return get_profile4()


@pytest.fixture(scope="session")
def correction2():
    return get_correction(2)


@pytest.fixture(scope="session")
def correction4():
    return get_correction(4)

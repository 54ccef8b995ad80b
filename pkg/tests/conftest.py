import pathlib

import pytest
from hypothesis import HealthCheck, settings

from nfacount.automaton import load_nfa, normalize
from nfacount.unrolling import unroll

DATA = pathlib.Path(__file__).parent / "data"

settings.register_profile("suite", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("suite")


@pytest.fixture(scope="session")
def sample13():
    return load_nfa(DATA / "sample13.json")


@pytest.fixture(scope="session")
def sample13_u(sample13):
    return unroll(normalize(sample13), 4)

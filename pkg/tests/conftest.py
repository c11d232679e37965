from __future__ import annotations

import pytest

from kas.config import load_resources
from kas.queryproc import build_pattern_plans


@pytest.fixture(scope="session")
def resources():
    return load_resources()


@pytest.fixture(scope="session")
def grammar(resources):
    return resources.grammar


@pytest.fixture(scope="session")
def model(resources):
    return resources.model


@pytest.fixture(scope="session")
def tables(resources):
    return resources.tables


@pytest.fixture(scope="session")
def plans(resources):
    return build_pattern_plans(resources.grammar, resources.model, resources.tables)

"""
Test configuration and fixtures for slitforge

Shared λ-specs and parameter packs. Tree builds and the end-to-end CLI
pipeline are marked slow and skipped unless --slow is given.

Usage:
    # Fast unit and integration tests
    pytest tests/

    # Include slow tree builds
    pytest --slow tests/
"""

import pytest
from hypothesis import settings as hypothesis_settings

from slitforge.models.spec import parse_lambda_spec
from tests.fixtures.specs import EXP_GAPS, GOLDEN, LARGE_GAP, toy_pack

# Bounded property batteries without deadlines
hypothesis_settings.register_profile("slitforge", max_examples=50, deadline=None)
hypothesis_settings.load_profile("slitforge")


def pytest_addoption(parser):
    """Add custom command line options for pytest."""
    parser.addoption(
        "--slow",
        action="store_true",
        default=False,
        help="Run tests marked slow (tree builds, CLI pipeline)"
    )


@pytest.fixture(scope="session")
def golden():
    """λ = [0; 1, 1, 1, ...]"""
    return parse_lambda_spec(GOLDEN)


@pytest.fixture(scope="session")
def large_gap():
    """λ with a_3 = 100000"""
    return parse_lambda_spec(LARGE_GAP)


@pytest.fixture(scope="session")
def exp_gaps():
    """Gap family with n_k = e^q"""
    return parse_lambda_spec(EXP_GAPS)


@pytest.fixture(scope="session")
def pack():
    """Relaxed toy parameter pack"""
    return toy_pack()


# Markers for different test types
def pytest_configure(config):
    """Configure pytest markers."""
    config.addinivalue_line(
        "markers", "integration: mark test as integration test"
    )
    config.addinivalue_line(
        "markers", "slow: mark test as slow running"
    )


# Skip slow tests by default unless --slow
def pytest_collection_modifyitems(config, items):
    """Modify test collection to skip slow tests by default."""
    if config.getoption("--slow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --slow option to run")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)

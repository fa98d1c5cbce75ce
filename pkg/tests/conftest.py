import pytest

from juliahull import coeffs, dynamics


@pytest.fixture(scope="session")
def table24():
    """Full-depth table at lambda = 4, shared across the whole run."""
    return coeffs.cached_table(4, depth=24, exact_depth=12)


@pytest.fixture(scope="session")
def table12():
    return coeffs.cached_table(4, depth=12, exact_depth=12)


@pytest.fixture(scope="session")
def params():
    return dynamics.MapParams(4.0)

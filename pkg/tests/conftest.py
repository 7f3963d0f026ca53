import pytest

from primeaps.sieve import build_factor_table

# covers m*N + b up to m=6, N=1e6 used by the heaviest checks
TABLE_LIMIT = 6_000_010


@pytest.fixture(scope="session")
def table():
    return build_factor_table(TABLE_LIMIT)


@pytest.fixture(scope="session")
def small_table():
    return build_factor_table(20_000)

import pytest

from wwcva.exposure import build_exposure_set
from wwcva.market import SwapMarket


@pytest.fixture(scope="session")
def market10():
    """Reference market: flat 2% curve, 70bp normal vol, 10Y quarterly swap."""
    return SwapMarket.build(0.02, 0.007, maturity=10.0)


@pytest.fixture(scope="session")
def exposures10(market10):
    return build_exposure_set(market10)


@pytest.fixture(scope="session")
def market2():
    """Small market for lattice-heavy unit tests."""
    return SwapMarket.build(0.02, 0.007, maturity=2.0)


@pytest.fixture(scope="session")
def bermudan_cache():
    """Hedge prices shared across the whole session (keyed by strike)."""
    return {}

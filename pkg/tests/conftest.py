import pytest

from nlsbound.ground_state import shoot_radial


@pytest.fixture(scope="session")
def base_1_4():
    """lam=1 soliton for N=1, p=4 (the sech oracle)."""
    return shoot_radial(1, 4.0, 1.0)


@pytest.fixture(scope="session")
def base_2_3():
    """lam=1 soliton for N=2, p=3."""
    return shoot_radial(2, 3.0, 1.0)


@pytest.fixture(scope="session")
def base_3_3():
    """lam=1 soliton for N=3, p=3."""
    return shoot_radial(3, 3.0, 1.0)

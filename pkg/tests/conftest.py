import math

import pytest

from hetcoop.model import PowerModelParams, Scenario, TierParams, validate_scenario

LAMBDA_M_REF = 1.0 / (500.0**2 * math.pi)  # BS/m^2


def make_scenario(
    ratio: float = 50.0,
    p_m: float = 50.0,
    p_s: float = 1.0,
    alpha: float = 4.0,
    k: int = 2,
    sigma2: float = 0.0,
    lambda_m: float = LAMBDA_M_REF,
    n_users: int = 30,
    n_max: int = 100,
    p_max: float = 8000.0,
    p_static: float = 20.0,
    p_backhaul: float = 1.0,
    bandwidth_hz: float = 20e6,
) -> Scenario:
    return validate_scenario(
        Scenario(
            macro=TierParams(density=lambda_m, tx_power=p_m),
            small=TierParams(density=ratio * lambda_m, tx_power=p_s),
            alpha=alpha,
            sigma2=sigma2,
            k=k,
            bandwidth_hz=bandwidth_hz,
            power_model=PowerModelParams(
                n_users=n_users,
                n_max=n_max,
                p_max=p_max,
                p_static=p_static,
                p_backhaul=p_backhaul,
            ),
        )
    )


@pytest.fixture(scope="session")
def fig2_scenario() -> Scenario:
    """Per-event coverage reference set: alpha=4, ratio 50, P_m=50, P_s=1."""
    return make_scenario()


@pytest.fixture(scope="session")
def fig5_scenario() -> Scenario:
    """Association reference set: alpha=3, ratio 10, P_m=50, P_s=2."""
    return make_scenario(ratio=10.0, p_s=2.0, alpha=3.0)


@pytest.fixture(scope="session")
def fig6_scenario() -> Scenario:
    """Rate/EE reference set: alpha=4, P_m=50, P_s=2, B=20 MHz."""
    return make_scenario(ratio=10.0, p_s=2.0)


@pytest.fixture(scope="session")
def alt_scenario() -> Scenario:
    """A parameter set unrelated to the reference figures."""
    return make_scenario(ratio=7.0, p_m=80.0, p_s=3.0, lambda_m=3e-6)

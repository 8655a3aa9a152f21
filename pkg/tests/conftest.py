from pathlib import Path

import pytest

from gridgame import Pipeline, load_scenario

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

# published reference values the suite checks against ------------------------

SHIFT_FACTOR_TABLE = {
    (1, 2): [0.1939, -0.476, -0.349, 0.0, 0.1595],
    (1, 4): [0.4376, 0.258, 0.1895, 0.0, 0.36],
    (1, 5): [0.3685, 0.2176, 0.1595, 0.0, -0.5195],
    (2, 3): [0.1939, 0.5241, -0.349, 0.0, 0.1595],
    (3, 4): [0.1939, 0.5241, 0.6510, 0.0, 0.1595],
    (5, 4): [0.3685, 0.2176, 0.1595, 0.0, 0.4805],
}

PAYOFF_TABLE = [
    [0.00, 3.14, 2.81, 3.14, 2.81, 4.84],   # defend z1z4
    [1.17, 0.00, 2.81, 1.17, 5.00, 2.81],   # defend z1z5
    [1.17, 3.14, 0.00, 5.00, 1.17, 3.14],   # defend z1z10
    [1.28, 1.28, 4.43, 0.00, 2.81, 2.81],   # defend z4z5
    [1.28, 5.35, 1.28, 3.14, 0.00, 3.14],   # defend z4z10
    [3.21, 1.28, 1.28, 1.17, 1.17, 0.00],   # defend z5z10
]

STRATEGY_LABELS = ("z1z4", "z1z5", "z1z10", "z4z5", "z4z10", "z5z10")

DEFENDER_MIX = [0.0, 0.094, 0.26, 0.262, 0.0347, 0.35]
ATTACKER_MIX = [0.556, 0.0, 0.038, 0.036, 0.037, 0.333]

# per-measurement flow sensitivities as printed for z1..z11 (z12 omitted);
# signs depend on meter orientation, magnitudes do not
SENSITIVITY_ABS = [0.2, 0.05, 0.0, 0.19, 0.25, 0.04, 0.04, 0.08, 0.13, 0.18, 0.05]


@pytest.fixture(scope="session")
def pjm_config():
    return load_scenario(FIXTURES / "pjm5.toml")


@pytest.fixture(scope="session")
def pjm(pjm_config):
    pipe = Pipeline(pjm_config)
    pipe.stage("scenario")
    return pipe


@pytest.fixture(scope="session")
def twobus_config():
    return load_scenario(FIXTURES / "twobus.toml")


@pytest.fixture(scope="session")
def pjm_doc():
    from gridgame import load_fixture
    return load_fixture(FIXTURES / "pjm5.toml")

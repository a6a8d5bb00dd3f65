from pathlib import Path

import pytest

from layered_num import engine, model

SCENARIO_PATH = Path(__file__).resolve().parent.parent / "scenarios" / "paper-fig2.json"


@pytest.fixture(scope="session")
def default_scenario():
    return model.load_scenario(SCENARIO_PATH)


@pytest.fixture(scope="session")
def default_trace(default_scenario):
    # One shared run; several suites read different slices of it.
    return engine.run(default_scenario)

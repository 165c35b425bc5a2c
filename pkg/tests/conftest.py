import time

import pytest

from lbsim.engine import POLICIES, DEFAULT_SEED, SimulationConfig, run
from lbsim.scenario import build_paper_scenario


@pytest.fixture(scope="session")
def paper_runs():
    """Default-config traces of every policy on the reference scenario."""
    scenario = build_paper_scenario()
    started = time.perf_counter()
    traces = {p: run(scenario, p, SimulationConfig(), DEFAULT_SEED) for p in POLICIES}
    return {"scenario": scenario, "traces": traces, "seconds": time.perf_counter() - started}

import math
import time

import numpy as np
import pytest

from oudw import ModelParams, rng
from oudw.harness import ExperimentSpec, replicate, run_replicates

# seeds are fixed once per experiment; never tuned to an outcome
MAIN_SEED = rng.DEFAULT_SEED
NULL_SEED = rng.DEFAULT_SEED + 1
POWER_SEED = rng.DEFAULT_SEED + 2

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def main_experiment():
    """theta=-2, rho=-1, T=200, h=0.01, R=2000 with raw estimates kept."""
    spec = ExperimentSpec(ModelParams(-2.0, -1.0), 200.0, 0.01, 2000, seed=MAIN_SEED)
    start = time.perf_counter()
    summary = replicate(spec, keep_raw=True)
    return summary, time.perf_counter() - start


@pytest.fixture(scope="session")
def null_replicates():
    """theta=-1, rho=0, T=500, h=0.01, R=2000."""
    return run_replicates(ModelParams(-1.0, 0.0), 500.0, 0.01, 2000, NULL_SEED)


@pytest.fixture(scope="session")
def power_replicates():
    """theta=-2, rho=-1, T=500, h=0.01, R=500."""
    return run_replicates(ModelParams(-2.0, -1.0), 500.0, 0.01, 500, POWER_SEED)


def within_se(values: np.ndarray, target: float, k: float = 3.0) -> tuple[bool, float]:
    se = values.std(ddof=1) / math.sqrt(values.size)
    z = (values.mean() - target) / se
    return abs(z) <= k, z


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

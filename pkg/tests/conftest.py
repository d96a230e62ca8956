import time

import numpy as np
import pytest

from trapgate import (default_control_problem, default_transport_schedule,
                      optimize, run_transport)


@pytest.fixture(scope="session")
def default_run_t500():
    """The shipped T=500 transport at full resolution, with its wall time."""
    schedule = default_transport_schedule(500.0)
    started = time.perf_counter()
    report = run_transport(schedule)
    elapsed = time.perf_counter() - started
    return report, elapsed


@pytest.fixture(scope="session")
def gate_trace():
    """The shipped desk-scale gate optimization, with its wall time."""
    problem = default_control_problem()
    started = time.perf_counter()
    trace = optimize(problem)
    elapsed = time.perf_counter() - started
    return problem, trace, elapsed


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)

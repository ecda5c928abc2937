import re

import numpy as np
import pytest

from mcrisk import Dataset

_CRITERION = re.compile(r"test_criterion_(\d+)_(\w+)")
_results = {}


def pytest_runtest_logreport(report):
    m = _CRITERION.search(report.nodeid)
    if not m:
        return
    key = (int(m.group(1)), m.group(2))
    if report.when == "call" or report.outcome != "passed":
        prev = _results.get(key)
        if prev is None or prev[0] == "PASS":
            timed = dict(report.user_properties).get("timed")
            _results[key] = ("PASS" if report.passed else "FAIL", timed)


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for (num, name), (status, timed) in sorted(_results.items()):
        budget = f"{timed[0]:.2f} s of {timed[1]:g} s budget" if timed else "not timed"
        terminalreporter.write_line(f"criterion {num} [{name}]: {status} ({budget})")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def ball_points(rng, n, d, radius=1.0):
    G = rng.standard_normal((n, d))
    G /= np.linalg.norm(G, axis=1, keepdims=True)
    return G * radius * rng.random((n, 1)) ** (1.0 / d)


@pytest.fixture
def unit_ball_data(rng):
    return Dataset(ball_points(rng, 40, 3), None, 1.0)

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ivbma.simulate import SimSpec, generate  # noqa: E402


def pytest_configure(config):
    config._acceptance = []


def pytest_terminal_summary(terminalreporter, config):
    lines = getattr(config, "_acceptance", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)


@pytest.fixture
def report(request):
    """Record one PASS/FAIL line for the terminal summary."""
    def _record(label: str, ok: bool, detail: str = ""):
        line = f"{'PASS' if ok else 'FAIL'}  {label}" + (f"  ({detail})" if detail else "")
        request.config._acceptance.append(line)
        print(line)
    return _record


@pytest.fixture(scope="session")
def sim_data():
    data, truth = generate(SimSpec(), np.random.default_rng(2024))
    return data, truth


@pytest.fixture
def rng():
    return np.random.default_rng(12345)

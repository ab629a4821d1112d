import numpy as np
import pytest

from stripedge import Image, Params


def step_image(n=64, col=32):
    data = np.zeros((n, n))
    data[:, col:] = 1.0
    return Image(data)


@pytest.fixture
def step():
    return step_image()


@pytest.fixture
def default_params():
    return Params(alpha=8.0, beta=150.0, eps=3.0, kappa=0.1, delta=2.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE_LINES = []


@pytest.fixture
def report():
    """Record one PASS/FAIL line for the acceptance summary."""

    def record(number, name, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {name}: {detail}"
        print(line)
        _ACCEPTANCE_LINES.append(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)

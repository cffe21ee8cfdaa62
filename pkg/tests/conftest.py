import numpy as np
import pytest

from oscbath import discretize, white_noise_density


@pytest.fixture(scope="session")
def wn_bath64():
    """Reference bath: white noise, eta = m = 1, cutoff 20, 64 oscillators."""
    return discretize(white_noise_density(1.0, 1.0, 20.0), 64)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = pytest.StashKey[list]()


@pytest.fixture
def verdict(request):
    """Record one pass/fail line per acceptance criterion and assert it."""
    lines = request.config.stash.setdefault(ACCEPTANCE_LINES, [])

    def record(label, passed, detail):
        line = f"[{'PASS' if passed else 'FAIL'}] {label}: {detail}"
        lines.append(line)
        print(line)
        assert passed, line

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)

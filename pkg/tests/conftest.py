import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("ctae", deadline=None, max_examples=100,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("ctae")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)



def pytest_configure(config):
    config.ctae_acceptance = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "ctae_acceptance", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)


@pytest.fixture
def acceptance(request):
    """Record one pass/fail line for the terminal summary and stdout."""

    def record(number, passed, detail):
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
        request.config.ctae_acceptance.append(line)
        print(line)
        return passed

    return record

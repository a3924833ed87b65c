import contextlib

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from sbiga import _accel, domains

settings.register_profile(
    "default",
    max_examples=40,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

ACCEPTANCE_LINES: list[str] = []


class AcceptanceLog:
    """Collects one PASS/FAIL line per criterion for the terminal summary."""

    @contextlib.contextmanager
    def criterion(self, number: int, title: str):
        details: list[str] = []
        try:
            yield details
        except BaseException:
            line = f"criterion {number:2d} FAIL  {title}" + (f"  [{'; '.join(details)}]" if details else "")
            ACCEPTANCE_LINES.append(line)
            print(line)
            raise
        line = f"criterion {number:2d} PASS  {title}" + (f"  [{'; '.join(details)}]" if details else "")
        ACCEPTANCE_LINES.append(line)
        print(line)


@pytest.fixture(scope="session")
def acceptance():
    return AcceptanceLog()


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture(params=["numpy", "numba"])
def backend(request):
    previous = _accel.backend()
    _accel.set_backend(request.param)
    yield request.param
    _accel.set_backend(previous)


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)


ALL_BUILTINS = domains.BUILTIN_TAGS
SB_STRAIGHT = ("center-scaled", "off-center-scaled", "disk", "off-center-disk")

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("ci", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("ci")


def random_symmetric(rng, n, scale=1.0):
    A = np.triu(rng.uniform(-1.0, 1.0, size=(n, n)) * scale, 1)
    return A + A.T


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


CRITERIA: list[str] = []


@pytest.fixture
def criterion():
    """Record and print one pass/fail line per acceptance criterion."""

    def report(number: int, ok: bool, detail: str) -> None:
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'} {detail}"
        CRITERIA.append(line)
        print(line)

    return report


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in sorted(CRITERIA, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)

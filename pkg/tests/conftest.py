import functools

import pytest
from hypothesis import settings

from cavityorbits.spectral import analyze

settings.register_profile("ci", deadline=None, derandomize=True, max_examples=60)
settings.load_profile("ci")

N_GLASS = 1.49
TABLE_R = (0.0, 1.0 / 3.0, 3.0 / 5.0)


@functools.lru_cache(maxsize=None)
def reference_analysis(r_asym: float):
    """Default pipeline (window [1, 16], step 0.01, gamma in [2, 50]) at n = 1.49."""
    return analyze(N_GLASS, r_asym)


@pytest.fixture(scope="session")
def analyses():
    return {r: reference_analysis(r) for r in TABLE_R}


ACCEPTANCE: dict[int, str] = {}


@pytest.fixture
def criterion():
    """Record a one-line verdict for an acceptance criterion."""

    def record(number: int, passed: bool, detail: str) -> None:
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
        ACCEPTANCE[number] = line
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[number])

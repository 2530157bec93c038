import numpy as np
import pytest

_ACCEPTANCE_LINES = []


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def acceptance_report():
    """Collect one summary line per acceptance criterion."""

    def report(line: str) -> None:
        print(line)
        _ACCEPTANCE_LINES.append(line)

    return report


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance.py" in report.nodeid and report.failed:
        name = report.nodeid.split("::")[-1]
        _ACCEPTANCE_LINES.append(f"FAIL {name}")


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

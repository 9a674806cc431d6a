import pytest

CRITERIA: list[str] = []


@pytest.fixture
def report():
    """Record one PASS/FAIL line; the lines are also echoed in the terminal summary."""

    def _report(label: str, passed: bool, detail: str) -> bool:
        line = f"{label}: {'PASS' if passed else 'FAIL'}  {detail}"
        CRITERIA.append(line)
        print(line)
        return passed

    return _report


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in CRITERIA:
            terminalreporter.write_line(line)

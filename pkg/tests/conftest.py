import pytest

ACCEPTANCE_LINES = {}


@pytest.fixture
def report():
    """Record one summary line for an acceptance criterion."""
    def _record(number: int, title: str, passed: bool, detail: str):
        ACCEPTANCE_LINES[number] = f"criterion {number:2d} {'PASS' if passed else 'FAIL'}  {title}: {detail}"
    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])

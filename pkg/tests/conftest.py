import pytest

_LINES = []


@pytest.fixture
def record():
    """Collect one summary line per acceptance criterion."""
    def add(number, name, passed, detail=""):
        _LINES.append(f"criterion {number:>2} {'PASS' if passed else 'FAIL'}  {name}: {detail}")
    return add


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)

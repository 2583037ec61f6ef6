import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_CRITERIA = {}


@pytest.fixture
def report():
    """Record one acceptance criterion outcome for the end-of-run summary."""
    def record(number, name, passed, detail):
        _CRITERIA[number] = (name, bool(passed), detail)
    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        name, passed, detail = _CRITERIA[number]
        terminalreporter.write_line(
            f"criterion {number} {'PASS' if passed else 'FAIL'}  {name}: {detail}")

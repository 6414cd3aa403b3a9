import pytest

ACCEPTANCE = {}


@pytest.fixture
def record():
    """Log one acceptance verdict; the summary is printed at the end of the session."""

    def _record(number: int, name: str, ok: bool, detail: str) -> bool:
        line = f"criterion {number:2d} {name}: {'PASS' if ok else 'FAIL'} ({detail})"
        ACCEPTANCE[number] = line
        print(line)
        return ok

    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[number])

import pytest

ACCEPTANCE_LINES = {}


def record_criterion(number, ok, detail=""):
    """Remember one acceptance line; printed in the terminal summary."""
    status = "PASS" if ok else "FAIL"
    ACCEPTANCE_LINES[number] = f"criterion {number:2d}: {status}  {detail}".rstrip()


@pytest.fixture
def criterion():
    return record_criterion


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])

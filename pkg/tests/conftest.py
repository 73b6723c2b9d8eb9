import pytest

_ACCEPTANCE = []


@pytest.fixture
def record():
    """Record one acceptance verdict; printed in the terminal summary."""
    def _record(label, passed, detail):
        _ACCEPTANCE.append((label, bool(passed), detail))
        return bool(passed)
    return _record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label, passed, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {label}: {detail}")

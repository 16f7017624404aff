import pytest

_CRITERIA = {}


@pytest.fixture
def criterion():
    """Record one acceptance criterion's verdict for the end-of-run summary."""

    def record(number, title, passed, detail):
        _CRITERIA.setdefault(number, []).append((title, bool(passed), detail))
        return bool(passed)

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        for title, passed, detail in _CRITERIA[number]:
            verdict = "PASS" if passed else "FAIL"
            terminalreporter.write_line(f"[{verdict}] criterion {number:>2}: {title}: {detail}")

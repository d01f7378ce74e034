import pytest

_CRITERIA = {}


@pytest.fixture
def record():
    """Record one acceptance-criterion outcome for the terminal summary."""

    def _record(number, name, passed, detail=""):
        _CRITERIA[number] = (name, bool(passed), detail)
        print(f"criterion {number} {'PASS' if passed else 'FAIL'}: {name} ({detail})")

    return _record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_CRITERIA):
        name, ok, detail = _CRITERIA[k]
        terminalreporter.write_line(f"criterion {k} {'PASS' if ok else 'FAIL'}: {name} ({detail})")

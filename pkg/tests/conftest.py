import pytest

_CRITERIA = {}


@pytest.fixture
def criterion_line():
    """Record one PASS/FAIL line per acceptance criterion for the terminal summary."""
    def record(number, checks):
        ok = all(c.passed for c in checks)
        detail = "; ".join(f"{'ok' if c.passed else 'FAILED'} {c.name} [{c.detail}]" for c in checks)
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
        _CRITERIA[number] = line
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for n in sorted(_CRITERIA):
            terminalreporter.write_line(_CRITERIA[n])

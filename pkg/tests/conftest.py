import pytest

_ACCEPTANCE_RESULTS = []


@pytest.fixture
def acceptance():
    """Record one pass/fail line for an acceptance criterion.

    Lines are echoed immediately (visible under -s) and replayed in the
    terminal summary so the default captured run still shows every verdict.
    """

    def record(name: str, ok: bool, detail: str = "") -> None:
        _ACCEPTANCE_RESULTS.append((name, bool(ok), detail))
        suffix = f" ({detail})" if detail else ""
        print(f"{'PASS' if ok else 'FAIL'}  {name}{suffix}")

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in _ACCEPTANCE_RESULTS:
        suffix = f" ({detail})" if detail else ""
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}{suffix}")

import pytest

_LINES: list[str] = []


@pytest.fixture(scope="session")
def criterion():
    """record(cid, ok, detail) prints one PASS/FAIL line and keeps it for the run summary."""

    def record(cid: str, ok: bool, detail: str) -> bool:
        line = f"{'PASS' if ok else 'FAIL'} {cid}: {detail}"
        print(line)
        _LINES.append(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_LINES, key=lambda s: int(s.split()[1][1:].rstrip(":"))):
            terminalreporter.write_line(line)

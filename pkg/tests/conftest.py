import pytest

_ACCEPTANCE: list[tuple[str, bool, str]] = []


@pytest.fixture
def acceptance():
    """Record one pass/fail line per acceptance criterion, then assert it."""

    def report(label: str, checks: dict[str, bool], detail: str = "") -> None:
        ok = all(bool(v) for v in checks.values())
        failed = [k for k, v in checks.items() if not v]
        _ACCEPTANCE.append((label, ok, detail if ok else f"{detail} failed: {', '.join(failed)}"))
        print(f"{'PASS' if ok else 'FAIL'}  {label}  {detail}")
        assert ok, f"{label}: failed checks {failed} ({detail})"

    return report


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label, ok, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {label}  {detail}")

import pytest

from acceptance_log import RESULTS


def pytest_terminal_summary(terminalreporter):
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(RESULTS):
        ok, title, detail = RESULTS[number]
        line = f"AC-{number:02d} {'PASS' if ok else 'FAIL'}  {title}"
        terminalreporter.write_line(line + (f"  ({detail})" if detail else ""))


@pytest.fixture(autouse=True)
def _no_guard_override(monkeypatch):
    monkeypatch.delenv("TROPGALOIS_NO_SCALE_GUARD", raising=False)

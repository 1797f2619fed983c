import json
from pathlib import Path

import pytest

_RESULTS: dict[int, dict] = {}
REPORT = Path(__file__).resolve().parent.parent / "reports" / "acceptance.json"


@pytest.fixture(scope="session")
def criterion():
    """``criterion(number, title, passed, detail, **values)`` registers one acceptance line."""

    def record(number: int, title: str, passed: bool, detail: str, **values) -> bool:
        _RESULTS[number] = {"title": title, "passed": bool(passed), "detail": detail, "values": values}
        return bool(passed)

    return record


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_RESULTS):
        r = _RESULTS[number]
        status = "PASS" if r["passed"] else "FAIL"
        terminalreporter.write_line(f"[{status}] criterion {number:>2} {r['title']}: {r['detail']}")
    REPORT.parent.mkdir(exist_ok=True)
    previous = json.loads(REPORT.read_text()) if REPORT.exists() else {}
    previous.update({str(k): v for k, v in _RESULTS.items()})
    REPORT.write_text(json.dumps(previous, indent=1, sort_keys=True) + "\n")

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

FIXTURES = Path(__file__).parent / "fixtures"

# criterion number -> (passed, detail); filled by the acceptance tests
VERDICTS = {}


def record(number: int, passed: bool, detail: str) -> None:
    VERDICTS[number] = (passed, detail)


def pytest_terminal_summary(terminalreporter):
    if not VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(VERDICTS):
        ok, detail = VERDICTS[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture(scope="session")
def gilby_dir() -> Path:
    return FIXTURES / "gilby"

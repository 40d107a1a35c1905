import sys
from pathlib import Path

# the oracle module sits next to the tests
sys.path.insert(0, str(Path(__file__).parent))


ACCEPTANCE_LINES = {}


def record_criterion(n, ok, detail):
    """Remember one acceptance line; printed at the end of the run."""
    line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[n] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])

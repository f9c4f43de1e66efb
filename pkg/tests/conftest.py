import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

# acceptance criteria append (number, title, passed, detail) here
ACCEPTANCE_RESULTS = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num, title, ok, detail in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {num:2d} {title}: {detail}")

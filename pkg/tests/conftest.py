import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

CRITERIA = 14


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS and not terminalreporter.stats.get("failed"):
        return
    terminalreporter.section("acceptance criteria")
    for key in range(1, CRITERIA + 1):
        title, ok, detail = mod.RESULTS.get(key, ("", False, "not reached"))
        terminalreporter.write_line(f"C{key:02d} {'PASS' if ok else 'FAIL'}  {title}  {detail}".rstrip())

import re
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

_CRITERION = re.compile(r"test_criterion_(\d+)")
_results: dict[int, list] = {}


def pytest_runtest_logreport(report):
    m = _CRITERION.search(report.nodeid)
    if not m:
        return
    if report.when == "call" or (report.when == "setup" and not report.passed):
        _results.setdefault(int(m.group(1)), []).append((report.nodeid, report.passed, report.duration))


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_results):
        runs = _results[n]
        ok = all(passed for _, passed, _ in runs)
        seconds = sum(d for _, _, d in runs)
        line = f"criterion {n:>2}: {'PASS' if ok else 'FAIL'} ({seconds:.2f}s)"
        failed = [nodeid.split("::")[-1] for nodeid, passed, _ in runs if not passed]
        if failed:
            line += "  failing: " + ", ".join(failed)
        terminalreporter.write_line(line)

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

# criterion id -> (title, outcome, detail)
_ACCEPTANCE = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(cid, title): one acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    cid, title = marker.args
    if report.when == "call" or (report.when == "setup" and report.failed):
        detail = getattr(item, "acceptance_detail", "")
        passed = report.passed and not (report.when == "setup")
        _ACCEPTANCE[cid] = (title, "PASS" if passed else "FAIL", detail)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for cid in sorted(_ACCEPTANCE, key=lambda c: [int(p) if p.isdigit() else p for p in c]):
        title, status, detail = _ACCEPTANCE[cid]
        line = f"{status} criterion {cid}: {title}"
        if detail:
            line += f" [{detail}]"
        tr.write_line(line)

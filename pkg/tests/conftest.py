import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

# criterion number -> True while every test marked with it has passed
_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion checked by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    report = outcome.get_result()
    n = mark.args[0]
    if report.when == "call" or report.failed:
        ok = report.passed if report.when == "call" else False
        _CRITERIA[n] = _CRITERIA.get(n, True) and ok


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        terminalreporter.write_line(f"Criterion {n}: {'PASS' if _CRITERIA[n] else 'FAIL'}")

import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

_results = {}
_titles = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by a test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    _titles[number] = title
    if report.when == "call" or (report.when == "setup" and not report.passed):
        ok = report.passed
        _results[number] = _results.get(number, True) and ok


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_results):
        verdict = "PASS" if _results[number] else "FAIL"
        terminalreporter.write_line(f"criterion {number:>2}: {verdict}  {_titles[number]}")

from __future__ import annotations

import time

import pytest

# nodeid -> (criterion number, label); filled at collection time
_CRITERIA: dict = {}
_OUTCOMES: dict = {}


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "acceptance(number, label): numbered acceptance criterion"
    )


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("acceptance")
        if mark is not None:
            _CRITERIA[item.nodeid] = mark.args


def pytest_runtest_logreport(report):
    if report.nodeid not in _CRITERIA:
        return
    if _OUTCOMES.get(report.nodeid, ("",))[0] == "FAIL":
        return
    # a skipped criterion counts as not met
    if report.failed or (report.when == "call" and report.skipped):
        _OUTCOMES[report.nodeid] = ("FAIL", report.duration)
    elif report.when == "call":
        _OUTCOMES[report.nodeid] = ("PASS", report.duration)


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    rows = sorted((_CRITERIA[k][0], _CRITERIA[k][1], *v) for k, v in _OUTCOMES.items())
    for number, label, outcome, duration in rows:
        terminalreporter.write_line(f"criterion {number}: {outcome}  {label}  ({duration:.2f} s)")


@pytest.fixture
def stopwatch():
    """Callable returning seconds since the test body started."""
    start = time.perf_counter()
    return lambda: time.perf_counter() - start

"""Collects per-criterion outcomes of the acceptance suite and prints them
as one PASS/FAIL line each at the end of the run."""

from collections import defaultdict

import pytest

_outcomes = defaultdict(list)
_details = defaultdict(list)
_titles = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    number = marker.kwargs["criterion"]
    _titles[number] = marker.kwargs.get("title", "")
    failed_setup = report.when == "setup" and not report.passed
    if report.when == "call" or failed_setup:
        _outcomes[number].append(report.passed)
        _details[number].extend(v for k, v in item.user_properties if k == "detail")


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(_outcomes):
        status = "PASS" if all(_outcomes[number]) else "FAIL"
        tr.write_line(f"criterion {number}: {status}  {_titles[number]}")
        for line in _details[number]:
            tr.write_line(f"    {line}")

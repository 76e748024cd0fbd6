import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_outcomes: dict[str, tuple[str, bool, list[str]]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(label): acceptance criterion reported in the summary")


@pytest.fixture
def detail(request):
    """Collects free-form measurement lines shown next to the criterion verdict."""
    lines: list[str] = []
    request.node._criterion_detail = lines
    return lines


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when != "call" and not report.failed:
        return
    label = marker.args[0]
    prev = _outcomes.get(item.nodeid, (label, True, []))
    _outcomes[item.nodeid] = (label, prev[1] and report.passed, getattr(item, "_criterion_detail", []))


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for label, passed, lines in _outcomes.values():
        tr.write_line(f"{'PASS' if passed else 'FAIL'}  {label}")
        for line in lines:
            tr.write_line(f"      {line}")

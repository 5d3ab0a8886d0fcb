"""Acceptance bookkeeping: one PASS/FAIL line per numbered criterion in the summary."""

from __future__ import annotations

import pytest

CRITERIA = {
    1: "extension soundness over random and closed-form generators",
    2: "exact rotation and displacement dualities",
    3: "commutator pair decides the equation",
    4: "Abel solver accuracy, reconstruction and gauge covariance",
    5: "build/extract round trip of periodic displacements",
    6: "homogeneous closure of the Abel-built positive branch",
    7: "conditional Cauchy equation checks",
    8: "single-map equation and commutation co-vanish",
    9: "explorer evidence run and determinism",
    10: "command line end to end and JSON round trip",
}

_results: dict[int, list] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): numbered acceptance criterion checked by this test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    n = marker.args[0]
    failed = report.failed
    if report.when == "call" or (report.when == "setup" and not report.passed):
        detail = "; ".join(str(v) for k, v in item.user_properties if k == "detail")
        if report.skipped:
            status = "SKIP"
        else:
            status = "FAIL" if failed else "PASS"
        _results.setdefault(n, []).append((status, item.name, detail))


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for n, title in CRITERIA.items():
        runs = _results.get(n)
        if not runs:
            terminalreporter.write_line(f"criterion {n:2d}: NOT RUN  {title}")
            continue
        statuses = [s for s, _, _ in runs]
        status = "FAIL" if "FAIL" in statuses else ("SKIP" if "PASS" not in statuses else "PASS")
        details = " | ".join(d for _, _, d in runs if d)
        line = f"criterion {n:2d}: {status}  {title}"
        terminalreporter.write_line(line + (f"  [{details}]" if details else ""))

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

CRITERIA = {
    1: "DCT codec matches brute-force sums; round trip",
    2: "importance ordering: permutation, monotone, diagonals, oracle",
    3: "encoding identities, band limit, resize identity, chromosome splits",
    4: "architecture arithmetic (728, 3680, 184:1)",
    5: "SNES population size and learning rates",
    6: "SNES optimization benchmarks and update invariance",
    7: "fitness function unit cases",
    8: "desk-scale evolution: single-matrix C=20 vs direct",
    9: "generalization machinery: resize and direct round trip",
    10: "reproducibility of run records",
}

_outcomes: dict[int, list[str]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if report.when == "call" or report.outcome != "passed":
        _outcomes.setdefault(marker.args[0], []).append(report.outcome)


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for n, title in CRITERIA.items():
        results = _outcomes.get(n)
        if not results:
            status = "NOT RUN"
        elif all(r == "passed" for r in results):
            status = "PASS"
        else:
            status = "FAIL"
        terminalreporter.write_line(f"{status:7s} criterion {n:2d}: {title}")

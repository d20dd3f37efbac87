import re
from collections import OrderedDict

import numpy as np
import pytest

from fractri.corpus import builtin
from fractri.ifs import ScalingPolicy
from fractri.bfif import build_model

_CRITERIA: "OrderedDict[int, list[tuple[str, str]]]" = OrderedDict()
_NAME = re.compile(r"test_criterion_(\d+)_")


@pytest.fixture(scope="session")
def matyas():
    return builtin("matyas")


@pytest.fixture(scope="session")
def camel():
    return builtin("three-hump-camel")


@pytest.fixture(scope="session")
def matyas_d4(matyas):
    """Matyas on its canonical triangle, d = 4, centroid scaling."""
    return build_model(matyas.base, 4, ScalingPolicy(), function=matyas, source=matyas.name)


@pytest.fixture(scope="session")
def matyas_d4_fixed(matyas):
    """Same data with one uniform scaling factor, so the surface is continuous across edges."""
    return build_model(matyas.base, 4, ScalingPolicy("fixed", 0.3), function=matyas,
                       source=matyas.name)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_runtest_logreport(report):
    m = _NAME.search(report.nodeid)
    if m is None or "test_acceptance" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _CRITERIA.setdefault(int(m.group(1)), []).append((report.nodeid.split("::")[-1],
                                                          report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        results = _CRITERIA[number]
        verdict = "PASS" if all(outcome == "passed" for _, outcome in results) else "FAIL"
        failed = [name for name, outcome in results if outcome != "passed"]
        detail = f" (failed: {', '.join(failed)})" if failed else ""
        terminalreporter.write_line(f"criterion {number:>2}: {verdict}{detail}")

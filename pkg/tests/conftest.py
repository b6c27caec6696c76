import numpy as np
import pytest

from wavebcd.degradation import DegradationSpec
from wavebcd.problem import synthesize_problem
from wavebcd.synthetic import piecewise_smooth
from wavebcd.wavelet import parse_wavelet


def make_problem(side=32, levels=2, sigma_blur=2.0, sigma_noise=0.01, lam=1e-3, wavelet="db4", seed=0, step_factor=1.9):
    truth = piecewise_smooth(side, np.random.default_rng(seed))
    spec = DegradationSpec(sigma_blur, sigma_noise, seed, check_ranges=False)
    return synthesize_problem(truth, spec, levels, parse_wavelet(wavelet), lam, step_factor)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def small_problem():
    return make_problem()


# one summary line per acceptance criterion, after the normal report
_CRITERIA = {}


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark:
            _CRITERIA.setdefault(mark.args[0], {"title": mark.args[1], "outcomes": []})
            item.user_properties.append(("criterion", mark.args[0]))


def pytest_runtest_logreport(report):
    number = dict(report.user_properties).get("criterion")
    if number is None:
        return
    if report.when == "call" or report.outcome != "passed":
        _CRITERIA[number]["outcomes"].append(report.outcome)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        entry = _CRITERIA[number]
        outcomes = entry["outcomes"]
        if not outcomes:
            status = "NOT RUN"
        elif "failed" in outcomes:
            status = "FAIL"
        elif all(o == "passed" for o in outcomes):
            status = "PASS"
        else:
            status = "SKIPPED"
        terminalreporter.write_line(f"criterion {number:>2}: {status:<7} {entry['title']}")

import numpy as np
import pytest

from xlpool import FeatureTensor, LayerPair


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_tensor(rng, h, w, d, nonneg=False):
    data = rng.standard_normal((h, w, d))
    if nonneg:
        data = np.abs(data)
    return FeatureTensor.from_array(data, nonneg=nonneg)


def make_pair(rng, h, w, d_local, d_guide, nonneg=False):
    return LayerPair(local=make_tensor(rng, h, w, d_local, nonneg),
                     guide=make_tensor(rng, h, w, d_guide, nonneg))


_acceptance_results = []


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance" in report.nodeid:
        name = report.nodeid.split("::")[-1]
        _acceptance_results.append((name, report.outcome))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _acceptance_results:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name, outcome in _acceptance_results:
        status = "PASS" if outcome == "passed" else outcome.upper()
        terminalreporter.write_line(f"{status:6s} {name}")

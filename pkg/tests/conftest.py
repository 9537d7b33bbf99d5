import numpy as np
import pytest

from huber_rkhs.scenario import scenario_from_dict


def make_scenario(noise=None, target=None, kernel=None, marginal=None, probe_points=1024):
    data = {"noise": noise or {"family": "student_t", "dof": 2.5, "epsilon": 1.0},
            "target": target or {"family": "sinusoid", "amplitude": 1.0, "frequency": 1.0},
            "probe_points": probe_points}
    if kernel:
        data["kernel"] = kernel
    if marginal:
        data["marginal"] = marginal
    return scenario_from_dict(data)


@pytest.fixture
def heavy_scenario():
    return make_scenario()


@pytest.fixture
def quiet_scenario():
    # zero noise, zero target
    return make_scenario(noise={"family": "gaussian", "sd": 0.0},
                         target={"family": "constant", "value": 0.0})


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


_CRITERIA = []


@pytest.fixture
def criterion(request):
    """Record one acceptance line; printed in the terminal summary and to stdout."""

    def record(number, passed, detail):
        line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
        _CRITERIA.append((number, line))
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(_CRITERIA):
            terminalreporter.write_line(line)

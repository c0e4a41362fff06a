import numpy as np
import pytest
from hypothesis import settings

from maxstab import models as M
from maxstab.coeffs import CoefficientTable, convert

settings.register_profile("maxstab", deadline=None, derandomize=True)
settings.load_profile("maxstab")

# exchangeable trivariate Choquet models, tau by subset size
TABLE1_TAU = {
    "A": (0.3, 0.2, 0.3),
    "B": (0.1, 0.3, 0.3),
    "C": (0.4, 0.1, 0.4),
    "D": (0.3, 0.0, 0.7),
}
# chi_12, chi_123, theta_12, theta_123
TABLE1_PUBLISHED = {
    "A": (0.5, 0.3, 1.5, 1.8),
    "B": (0.6, 0.3, 1.4, 1.5),
    "C": (0.5, 0.4, 1.5, 1.9),
    "D": (0.7, 0.7, 1.3, 1.6),
}


def table1_model(name: str) -> M.Choquet:
    return M.Choquet(CoefficientTable.exchangeable(3, "tau", TABLE1_TAU[name]))


def table1_json(name: str) -> dict:
    t1, t2, t3 = TABLE1_TAU[name]
    tau = {"1": t1, "2": t1, "3": t1, "1,2": t2, "1,3": t2, "2,3": t2, "1,2,3": t3}
    return {"family": "choquet", "d": 3, "tau": tau}


def battery():
    """Two models per family over d in {2, 3}."""
    return [
        ("dirichlet(0.5,2)", M.Dirichlet((0.5, 2.0))),
        ("dirichlet(1.5,3,12)", M.Dirichlet((1.5, 3.0, 12.0))),
        ("hr(1)", M.HuslerReiss.bivariate(1.0)),
        ("hr3(line)", M.model_from_json({"family": "husler_reiss", "gamma": [[0, 1, 4], [1, 0, 1], [4, 1, 0]]})),
        ("choquet(table1 A)", table1_model("A")),
        ("choquet(theta12=1.5)", M.Choquet(convert(CoefficientTable.exchangeable(2, "theta", (1.0, 1.5)), "tau"))),
    ]


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture(params=list("ABCD"))
def table1(request):
    return request.param, table1_model(request.param)


# one line per acceptance criterion, echoed after the run
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from dtnjordan.assembly import CoefficientSet, assemble_forms
from dtnjordan.keldysh import make_defective_boundary_operator
from dtnjordan.mesh import build_interval_mesh, build_rectangle_mesh
from dtnjordan.realizations import boundary_operator, dirichlet_pencil

settings.register_profile("default", deadline=None, max_examples=30,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


class Bundle:
    def __init__(self, domain, coeffs, B=None):
        self.domain = domain
        self.coeffs = coeffs
        self.forms = assemble_forms(domain, coeffs)
        self.pencil = dirichlet_pencil(self.forms)
        self.B = B


@pytest.fixture(scope="session")
def laplace_1d():
    d = build_interval_mesh(100)
    return Bundle(d, CoefficientSet.laplacian(d))


@pytest.fixture(scope="session")
def laplace_1d_n2():
    d = build_interval_mesh(2)
    return Bundle(d, CoefficientSet.laplacian(d))


@pytest.fixture(scope="session")
def complex_1d():
    d = build_interval_mesh(40)
    return Bundle(d, CoefficientSet.uniform(d, b_conv=[0.3 - 0.2j], c_conv=[-0.1 + 0.4j],
                                           c_zero=1.0 + 0.5j))


@pytest.fixture(scope="session")
def complex_2d():
    d = build_rectangle_mesh(6, 5, 1.2, 1.0)
    return Bundle(d, CoefficientSet.uniform(d, c_principal=[[1.5, 0.2j], [-0.1, 1.0]],
                                           b_conv=[0.2, -0.3j], c_conv=[0.1j, 0.25],
                                           c_zero=-0.5 + 1.0j))


@pytest.fixture(scope="session")
def neumann_1d(laplace_1d):
    b = Bundle(laplace_1d.domain, laplace_1d.coeffs)
    b.B = boundary_operator(b.forms)
    return b


@pytest.fixture(scope="session")
def defective_1d(laplace_1d):
    b = Bundle(laplace_1d.domain, laplace_1d.coeffs)
    b.B = make_defective_boundary_operator(b.forms, b.pencil, -1.0, np.array([1.0, 1.0]))
    b.lambda0 = -1.0
    return b


# one summary line per acceptance criterion

_CRITERIA = {}
_OUTCOMES = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("criterion")
        if m is not None:
            _CRITERIA[item.nodeid] = (m.args[0], m.args[1])


def pytest_runtest_logreport(report):
    if report.nodeid not in _CRITERIA:
        return
    if report.when == "call" or report.failed:
        prev = _OUTCOMES.get(report.nodeid, True)
        _OUTCOMES[report.nodeid] = prev and report.passed


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    merged = {}
    for nodeid, ok in _OUTCOMES.items():
        num, title = _CRITERIA[nodeid]
        merged[num] = (title, merged.get(num, (title, True))[1] and ok)
    terminalreporter.section("acceptance criteria")
    for num in sorted(merged):
        title, ok = merged[num]
        terminalreporter.write_line(f"criterion {num}: {'PASS' if ok else 'FAIL'}  {title}")

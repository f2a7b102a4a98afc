import pytest

from contact_blender.blender import BlenderVerifier
from contact_blender.chart import ChartParams
from contact_blender.flows import default_flow
from contact_blender.model import BlenderModel

# acceptance lines collected by tests/test_acceptance.py, printed at the end of the run
ACCEPTANCE_LINES = {}


@pytest.fixture(scope="session")
def chart():
    return ChartParams()


@pytest.fixture(scope="session")
def flow(chart):
    return default_flow(chart)


@pytest.fixture(scope="session")
def model():
    return BlenderModel()


@pytest.fixture(scope="session")
def verifier(model):
    return BlenderVerifier(model, (0.1, 0.05, 0.02))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])

import pytest
from hypothesis import settings

from pendula import experiments as ex
from pendula.model import ApparatusParams

settings.register_profile("default", max_examples=30, deadline=None)
settings.load_profile("default")

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def app():
    return ApparatusParams()


@pytest.fixture(scope="session")
def lz_config():
    return ex.preset("lz")


@pytest.fixture
def report():
    """Record one acceptance line and fail the test when the criterion fails."""

    def _report(label, ok, detail):
        line = f"{label}: {'PASS' if ok else 'FAIL'} ({detail})"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

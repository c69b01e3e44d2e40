import pathlib

import pytest

from mg1cr import MG1Model
from mg1cr.modelfile import load_model

FIXTURES = pathlib.Path(__file__).parent / "fixtures"
GOLDEN = pathlib.Path(__file__).parent / "golden"


@pytest.fixture
def s1():
    return MG1Model.qbd(0.6, 0.1, 0.3, 0.7, nu=0.3)


@pytest.fixture
def fixture_models():
    return {p.stem: load_model(p) for p in sorted(FIXTURES.glob("*.json"))
            if p.stem != "nonergodic_qbd"}


# Lines "criterion N: PASS/FAIL ..." appended by test_acceptance.
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)

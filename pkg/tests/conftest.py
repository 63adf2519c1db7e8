import numpy as np
import pytest

from filigeo import golden
from filigeo.geodesics import hw_geodesic_family

LAM = 1.5
EPS = 0.25


@pytest.fixture(scope="session")
def hw_ref():
    """Golden turning-point data for (lambda, eps) = (1.5, 0.25)."""
    return golden.hw_row(EPS)


@pytest.fixture(scope="session")
def hw_family():
    return hw_geodesic_family(LAM, EPS)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# acceptance verdicts, filled by test_acceptance.py and echoed after the run
ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(ACCEPTANCE, key=lambda k: int(k[1:])):
        ok, detail = ACCEPTANCE[cid]
        terminalreporter.write_line(f"{cid}: {'PASS' if ok else 'FAIL'}  {detail}")

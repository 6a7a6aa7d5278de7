import numpy as np
import pytest

from hybrid_control.model import Cohort


def make_cohort(time, status, treatment, external=None, covariates=None, prefix="S"):
    n = len(time)
    return Cohort(
        ids=[f"{prefix}{i}" for i in range(n)],
        covariates=np.zeros((n, 1)) if covariates is None else covariates,
        external=np.zeros(n, bool) if external is None else external,
        treatment=treatment,
        time=time,
        status=status,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE_REPORT: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_REPORT:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_REPORT):
        terminalreporter.write_line(ACCEPTANCE_REPORT[k])

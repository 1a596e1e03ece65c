import numpy as np
import pytest

from bicarleman.families import make_family
from bicarleman.pairing import build_plan
from bicarleman.transform import build_unitary
from bicarleman.wavelet import BasisEnumeration, MotherWavelet

ACCEPTANCE_LINES = []

# window reaching N - K = 116 scales below 0
PLAN_J = (-120, 3)
PLAN_K = (-4, 4)


@pytest.fixture(scope="session")
def mother():
    return MotherWavelet(m_max=3)


@pytest.fixture(scope="session")
def small_enum():
    return BasisEnumeration.from_window((-4, 3), (-4, 4))


@pytest.fixture(scope="session")
def plan_enum():
    return BasisEnumeration.from_window(PLAN_J, PLAN_K)


@pytest.fixture(scope="session")
def family():
    return make_family("graded", dim=128, members=3, rank=20, seed=0)


@pytest.fixture(scope="session")
def plan(family, plan_enum, mother):
    return build_plan(family, plan_enum, mother, n_pairs=12, m_max=3)


@pytest.fixture(scope="session")
def unitary(plan):
    return build_unitary(plan)


@pytest.fixture(scope="session")
def small_setup(mother):
    """A 40-dimensional run with 4 pairs; cheap enough for per-test synthesis."""
    fam = make_family("graded", dim=40, members=2, rank=6, seed=3)
    enum = BasisEnumeration.from_window((-40, 2), (-2, 2))
    plan = build_plan(fam, enum, mother, n_pairs=4, m_max=3)
    return fam, plan, build_unitary(plan)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

import numpy as np
import pytest

from locoplan.balance import Contact, Stance
from locoplan.fixtures import load_fixture
from locoplan.world import ContactSurface, WorldState

# biped double-support rest pose on flat ground, feet at x = -0.1 / +0.1
Q0_BIPED = np.array(
    [
        -1.64620099e-04,
        5.19615869e-01,
        -1.94519521e-05,
        -3.50027329e-01,
        7.00798784e-01,
        -3.50049991e-01,
        7.00844116e-01,
    ]
)

GRAVITY = np.array([0.0, -9.81])

_ACCEPTANCE_LINES = []


def record_criterion(name: str, ok: bool, detail: str = ""):
    tag = "PASS" if ok else "FAIL"
    line = f"[{tag}] {name}"
    if detail:
        line += f" -- {detail}"
    _ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def record_lines(lines):
    """Extra context (tables etc.) echoed under the criterion summary."""
    for line in lines:
        _ACCEPTANCE_LINES.append(f"    {line}")
        print(line)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in _ACCEPTANCE_LINES:
        terminalreporter.write_line(line)


@pytest.fixture
def arm():
    return load_fixture("arm-2link")


@pytest.fixture
def biped():
    return load_fixture("planar-biped-7dof")


@pytest.fixture
def point_robot():
    return load_fixture("point-robot-2d")


@pytest.fixture
def wheeler():
    return load_fixture("planar-wheeler-6dof")


@pytest.fixture
def ground():
    return ContactSurface("ground", (-1.0, 0.0), (2.0, 0.0), (0.0, 1.0), 0.6)


@pytest.fixture
def ground_world(ground):
    return WorldState(surfaces=[ground])


@pytest.fixture
def biped_stance():
    cl = Contact("foot_l", (-0.1, 0.0), (0.0, 1.0), 0.6)
    cr = Contact("foot_r", (0.1, 0.0), (0.0, 1.0), 0.6)
    return Stance((cl, cr))

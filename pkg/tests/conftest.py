import numpy as np
import pytest

from uwbrt.scene import Floor, Scene, build_warehouse
from uwbrt.materials import PEC


@pytest.fixture(scope="session")
def warehouse():
    return build_warehouse()


@pytest.fixture
def floor_only():
    return Scene.from_boxes([], floor=Floor(), bounds=(0, 0, 10, 10))


@pytest.fixture
def pec_floor_only():
    return Scene.from_boxes([], floor=Floor(PEC), bounds=(0, 0, 10, 10))


@pytest.fixture(scope="session")
def corridor_scene():
    """Two long racks forming a corridor closed by a third one."""
    return Scene.from_boxes([((0, 0, 0.3), (6, 1.3, 2.3)),
                             ((0, 2.8, 0.3), (6, 4.1, 2.3)),
                             ((7, 0, 0.3), (8.3, 4.1, 2.3))], floor=Floor())


def unit(v):
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

import pytest

from fabsched.model import ScheduleSolution, assign, build_minifab
from fabsched.randomized import random_config, random_instance  # noqa: F401


@pytest.fixture
def minifab5():
    return build_minifab(5)


@pytest.fixture
def minifab15():
    return build_minifab(15)


def five_wafer_schedule():
    """Reference 5-wafer optimum, makespan 17.

    Wafers 1 and 3 (jobs 0 and 2) start Diffusion1 together at hour 1 on
    the two diffusers; Lithography1 then runs in slots 4-5, 6-7, 8-9,
    10-11 and 12-13 in wafer order 1, 3, 2, 4, 5.  Each wafer runs the
    second half of its route back to back.
    """
    inst = build_minifab(5, 17)
    # job -> (diffuser, diffusion1 start, implanter, implantation1 start, lithography1 start)
    plan = {
        0: (0, 1, 2, 3, 4),
        2: (1, 1, 3, 3, 6),
        1: (0, 3, 2, 5, 8),
        3: (1, 3, 3, 5, 10),
        4: (0, 5, 2, 7, 12),
    }
    rows = []
    for j, (d, d1, im, i1, l1) in plan.items():
        rows += [
            assign(inst, j, 0, d, d1),
            assign(inst, j, 1, im, i1),
            assign(inst, j, 2, 4, l1),
            assign(inst, j, 3, 2, l1 + 2),
            assign(inst, j, 4, 0, l1 + 3),
            assign(inst, j, 5, 4, l1 + 4),
        ]
    return inst, ScheduleSolution(tuple(rows))


@pytest.fixture
def five_wafer():
    return five_wafer_schedule()


ACCEPTANCE_LINES = pytest.StashKey[list]()


@pytest.fixture(scope="session")
def acceptance_lines(pytestconfig):
    """Lines printed in the terminal summary after the acceptance run."""
    return pytestconfig.stash.setdefault(ACCEPTANCE_LINES, [])


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_LINES, None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)

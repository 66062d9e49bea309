import math
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from mtc_uplink.fbl import LinkBudget
from mtc_uplink.scenario import SystemConfig, pathloss_alpha
from mtc_uplink.solver import QosTarget

DEFAULT_CFG = SystemConfig()


def cell_budget(distance_m, shadow_db=0.0, cfg=DEFAULT_CFG):
    return cfg.link_budget(pathloss_alpha(distance_m, shadow_db))


@pytest.fixture
def cfg():
    return SystemConfig(shadowing_sigma_db=0.0)


@pytest.fixture
def lb100():
    return cell_budget(100.0)


@pytest.fixture
def qos16():
    return QosTarget(eps_ul=5e-8, w_c=5e5, n_max=10, n_t=16)


@pytest.fixture
def example_lb():
    return LinkBudget(alpha=1e-10, p_max=0.2, n0=10 ** -20.1, t_f=1e-4, u_bits=160)


ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)

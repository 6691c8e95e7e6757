import math

import numpy as np
import pytest

from saddle_lab.flow import saddle_frame, stable_asymptotics, stable_point, unstable_asymptotics
from saddle_lab.models import build_competition, build_linear_toy, build_ok_corral


@pytest.fixture(scope="session")
def okc():
    m = build_ok_corral()
    fr = saddle_frame(m)
    sa = stable_asymptotics(fr, stable_point(fr, math.sqrt(2.0)))
    return m, fr, sa


@pytest.fixture(scope="session")
def comp():
    m = build_competition(1.0, 1.0)
    fr = saddle_frame(m)
    d = float(np.hypot(*fr.to_canonical(m.initial_state)))
    sa = stable_asymptotics(fr, stable_point(fr, d))
    return m, fr, sa


@pytest.fixture(scope="session")
def comp_ua(comp):
    return unstable_asymptotics(comp[1], 0.1)


@pytest.fixture(scope="session")
def toy():
    m = build_linear_toy()
    fr = saddle_frame(m)
    sa = stable_asymptotics(fr, stable_point(fr, 0.5))
    return m, fr, sa


@pytest.fixture(scope="session")
def wide_toy():
    # room for x = (1, 1) and its flow to t = 1
    m = build_linear_toy(c1=3.0, c2=3.0)
    return m, saddle_frame(m)


CRITERIA_LINES = []


def record_criterion(number, ok, text):
    line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}: {text}"
    CRITERIA_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if CRITERIA_LINES:
        terminalreporter.section("acceptance criteria")
        for line in CRITERIA_LINES:
            terminalreporter.write_line(line)

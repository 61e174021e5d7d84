import math

import numpy as np
import pytest
from hypothesis import settings

from doobgls.tail_model import EmpiricalTable, Exponential, LogSquare, PowerLog, Scaled, SlowlyVarying, Subgaussian

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


def preset_tails():
    return [
        Exponential(),
        Subgaussian(1.0),
        Subgaussian(0.5),
        LogSquare(1.0),
        LogSquare(2.0),
        PowerLog(3.0),
        PowerLog(2.5, 1.0),
        PowerLog(4.0, 0.5, SlowlyVarying(1.0)),
        Scaled(Exponential(), 2.0),
        EmpiricalTable((0.5, 1.0, 2.0, 4.0), (0.8, 0.5, 0.1, 0.0)),
    ]


@pytest.fixture(params=preset_tails(), ids=lambda T: repr(T)[:40])
def preset(request):
    return request.param


def rel(a, b):
    return abs(a - b) / abs(b) if b != 0 else abs(a)


E = math.e
GRID = np.geomspace(1e-3, 1e3, 1000)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])

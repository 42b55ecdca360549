import math

import numpy as np
import pytest
from hypothesis import settings

from polyorb.geometry import Circle, EllipseCenter, EllipseFocus

settings.register_profile("ci", max_examples=40, deadline=None)
settings.load_profile("ci")

ORIGIN = np.zeros(3)

_criteria = []


def record_criterion(number, passed, detail):
    _criteria.append((number, passed, detail))


@pytest.fixture
def criterion():
    return record_criterion


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number, passed, detail in sorted(_criteria, key=lambda c: c[0]):
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {detail}")


@pytest.fixture
def unit_circle():
    return Circle(radius=1.0)


@pytest.fixture
def kepler_ellipse():
    return EllipseFocus(a=1.0, e=0.5)


@pytest.fixture
def hooke_ellipse():
    return EllipseCenter(a=2.0, b=1.0)


def half_perimeter(curve):
    return 0.5 * curve.arc_length(0.0, 2 * math.pi)

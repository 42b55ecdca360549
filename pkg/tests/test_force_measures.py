import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from polyorb.construction import RadialTangencyError, construct
from polyorb.force_measures import (
    local_polygon,
    prop1_measure,
    prop6_limit,
    prop6_measure,
    ratio_convergence,
    sample,
)
from polyorb.geometry import Circle, EllipseCenter, EllipseFocus

ORIGIN = np.zeros(3)


@pytest.mark.parametrize("n", [6, 12, 24, 96])
def test_polygon_measure_on_regular_ngon(n):
    circle = Circle(radius=1.0)
    orbit = construct(circle, ORIGIN, 0.0, 2 * math.sin(math.pi / n), max_steps=n)
    # d = 4 sin^2(a), areas2 = sin(2a) with a = pi/n
    expected = 1.0 / math.cos(math.pi / n) ** 2
    for j in range(1, n - 1):
        assert prop1_measure(orbit, j) == pytest.approx(expected, rel=1e-11)


def test_polygon_measure_scales_with_inverse_cube():
    n = 20
    vals = []
    for radius in (1.0, 2.0, 5.0):
        orbit = construct(Circle(radius=radius), ORIGIN, 0.0,
                          2 * radius * math.sin(math.pi / n), max_steps=4)
        vals.append(prop1_measure(orbit, 2) * radius**3)
    np.testing.assert_allclose(vals, vals[0], rtol=1e-11)


def test_polygon_measure_index_range():
    orbit = construct(Circle(radius=1.0), ORIGIN, 0.0, 0.3, max_steps=3)
    with pytest.raises(IndexError):
        prop1_measure(orbit, 0)
    with pytest.raises(IndexError):
        prop1_measure(orbit, 3)


@pytest.mark.parametrize("h", [0.3, 0.05, -0.05, 1e-3])
def test_tangent_measure_on_circle(h):
    # Q at polar angle h from P=(1,0): QR = 1 - cos h, QT = sin h
    value = prop6_measure(Circle(radius=1.0), ORIGIN, 0.0, h)
    assert value == pytest.approx(1.0 / (1.0 + math.cos(h)), rel=1e-9)


@given(st.floats(0.0, 2 * math.pi), st.floats(1e-3, 0.2))
def test_tangent_measure_sign_symmetry_on_circle(u, h):
    circle = Circle(radius=1.5)
    a = prop6_measure(circle, ORIGIN, u, h)
    b = prop6_measure(circle, ORIGIN, u, -h)
    assert a == pytest.approx(b, rel=1e-8)


def test_tangent_limit_on_circle():
    assert prop6_limit(Circle(radius=1.0), ORIGIN, 1.0) == pytest.approx(0.5, rel=1e-9)
    assert prop6_limit(Circle(radius=2.0), ORIGIN, 1.0) == pytest.approx(0.5 / 8, rel=1e-9)


def test_tangent_measure_rejects_radial_tangency():
    with pytest.raises(RadialTangencyError):
        prop6_measure(Circle(radius=1.0), [2.0, 0.0, 0.0], math.pi / 3, 0.01)
    with pytest.raises(ValueError):
        prop6_measure(Circle(radius=1.0), ORIGIN, 0.0, 0.0)


def test_local_polygon_middle_vertex_on_curve():
    curve = EllipseFocus(a=1.0, e=0.4)
    orbit = local_polygon(curve, ORIGIN, 1.3, 0.05)
    np.testing.assert_array_equal(orbit.vertices[1], curve.evaluate(1.3))
    assert orbit.chords[0] == pytest.approx(0.05, rel=1e-12)
    assert orbit.areas2[0] == pytest.approx(orbit.areas2[1], rel=1e-10)


@pytest.mark.parametrize("curve,u", [
    (Circle(radius=1.0), 0.7),
    (EllipseFocus(a=1.0, e=0.3), 2.0),
    (EllipseFocus(a=1.0, e=0.6), 4.0),
])
def test_ratio_tends_to_two(curve, u):
    report = ratio_convergence(curve, ORIGIN, u, [64, 128, 256, 512])
    assert report.extrapolated_limit == pytest.approx(2.0, abs=1e-3)
    assert report.metric[-1] == pytest.approx(2.0, abs=1e-2)


def test_ratio_deviation_decays():
    report = ratio_convergence(EllipseFocus(a=1.0, e=0.5), ORIGIN, 1.0, [16, 32, 64, 128])
    dev = report.extras["deviation"]
    assert all(b < a for a, b in zip(dev[:-1], dev[1:]))
    assert report.log_log_slope < -1.5


def test_sample_ratio_on_centred_ellipse():
    s = sample(EllipseCenter(a=2.0, b=1.0), ORIGIN, 0.8, 1e-3)
    assert s.ratio == pytest.approx(2.0, abs=1e-3)
    assert s.scale == 1e-3


def test_kepler_measure_is_inverse_square():
    curve = EllipseFocus(a=1.0, e=0.5)
    vals = []
    for u in np.linspace(0.0, 2 * math.pi, 9)[:-1]:
        sp = float(np.linalg.norm(curve.evaluate(u)))
        vals.append(prop6_limit(curve, ORIGIN, u) * sp**2)
    assert np.ptp(vals) / np.mean(vals) <= 1e-4


def test_hooke_measure_is_linear():
    curve = EllipseCenter(a=2.0, b=1.0)
    vals = []
    for u in np.linspace(0.1, 2 * math.pi, 9)[:-1]:
        sp = float(np.linalg.norm(curve.evaluate(u)))
        vals.append(prop6_limit(curve, ORIGIN, u) / sp)
    assert np.ptp(vals) / np.mean(vals) <= 1e-4

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from polyorb.analysis import (
    ConvergenceReport,
    FitError,
    appendix_a_bound_check,
    bound_study,
    chord_decay_study,
    coverage_convergence,
    extrapolate_to_zero,
    fit_order,
    integrator_order_study,
    parallel_map,
    richardson,
)
from polyorb.construction import construct
from polyorb.geometry import Circle, EllipseCenter, EllipseFocus
from polyorb.integrator import ForceLaw

ORIGIN = np.zeros(3)
NS = [16, 32, 64, 128]


@pytest.mark.parametrize("p", [1.0, 2.0, 3.5])
def test_fit_order_exact_power(p):
    ns = [10, 20, 40, 80]
    fit = fit_order(ns, [7.0 / n**p for n in ns])
    assert fit.slope == pytest.approx(-p, abs=1e-12)
    assert fit.intercept == pytest.approx(math.log(7.0), abs=1e-11)
    assert fit.residual < 1e-12
    assert fit.dropped == 0


def test_fit_order_mixed_terms():
    ns = [10, 100, 1000, 10_000]
    metric = [3.0 / n + 100.0 / n**2 for n in ns]
    fit = fit_order(ns, metric)
    assert -1.3 < fit.slope < -1.0
    assert fit.slope_ci > 0
    tail = fit_order(ns[1:], metric[1:])
    assert abs(tail.slope + 1.0) < abs(fit.slope + 1.0)


def test_fit_order_zero_and_negative():
    fit = fit_order([1, 2, 4, 8], [1.0, 0.0, 0.25, 0.125])
    assert fit.dropped == 1
    assert fit.slope == pytest.approx(-1.0, abs=1e-12)
    with pytest.raises(FitError):
        fit_order([1, 2, 4], [1.0, -0.5, 0.25])
    with pytest.raises(FitError):
        fit_order([1, 2, 4], [1.0, 0.0, 0.0])


@given(st.lists(st.floats(-5, 5), min_size=1, max_size=3))
def test_neville_reproduces_polynomials(coeffs):
    # extrapolation with k+1 nodes is exact for degree-k polynomials in h
    hs = [0.4 / 2**k for k in range(len(coeffs) + 1)]
    values = [coeffs[0] + sum(c * h ** (i + 1) for i, c in enumerate(coeffs[1:])) for h in hs]
    assert extrapolate_to_zero(hs, values) == pytest.approx(coeffs[0], abs=1e-10)


def test_richardson_two_levels():
    vals = [2.0 + 1.0 / n + 3.0 / n**2 for n in (10, 20, 40)]
    assert richardson(vals) == pytest.approx(2.0, abs=1e-13)
    assert richardson(vals[:2], orders=(1,)) == pytest.approx(2.0 - 3.0 / 200, abs=1e-13)


@pytest.mark.parametrize("curve,L", [
    (Circle(radius=1.0), 2 * math.pi),
    (EllipseFocus(a=1.0, e=0.5), None),
])
def test_chord_decay_first_order(curve, L):
    if L is None:
        L = curve.arc_length(0.0, math.pi)
    report = chord_decay_study(curve, ORIGIN, 0.0, L, NS)
    assert report.log_log_slope == pytest.approx(-1.0, abs=0.02)
    assert report.extras["chord_count"] == NS


def test_studies_need_three_increasing_n():
    with pytest.raises(FitError):
        chord_decay_study(Circle(radius=1.0), ORIGIN, 0.0, 1.0, [16, 32])
    with pytest.raises(FitError):
        chord_decay_study(Circle(radius=1.0), ORIGIN, 0.0, 1.0, [32, 16, 64])


def test_bound_vanishes_on_centred_circle():
    orbit = construct(Circle(radius=1.0), ORIGIN, 0.0, 0.1, max_steps=40)
    check = appendix_a_bound_check(orbit, Circle(radius=1.0))
    assert check.lhs <= 1e-13
    assert check.satisfied


def test_bound_on_centred_ellipse():
    curve = EllipseCenter(a=2.0, b=1.0)
    L = curve.arc_length(0.0, math.pi)
    report = bound_study(curve, ORIGIN, 0.0, L, [50, 100, 200])
    assert all(report.extras["satisfied"])
    # the accumulated chord change falls roughly by half per doubling of n
    lhs = report.metric
    assert 0.35 < lhs[1] / lhs[0] < 0.65
    assert 0.35 < lhs[2] / lhs[1] < 0.65
    ratio = [a / b for a, b in zip(lhs, report.extras["rhs"])]
    assert max(ratio) < 1.0


def test_coverage_on_circle_second_order():
    report = coverage_convergence(Circle(radius=1.0), ORIGIN, 0.0, 2.0, NS)
    assert report.log_log_slope <= -1.9
    assert report.extras["reference"] == 2.0
    for n, s in zip(NS, report.extras["chord_sum"]):
        assert s == pytest.approx(2.0, abs=1e-12)


def test_coverage_zero_length():
    report = coverage_convergence(Circle(radius=1.0), ORIGIN, 0.0, 0.0, NS)
    assert report.metric == [0.0] * 4
    assert report.dropped == 4


def test_coverage_on_ellipse_converges():
    curve = EllipseFocus(a=1.0, e=0.5)
    report = coverage_convergence(curve, ORIGIN, 0.0, 1.5, [16, 32, 64, 128, 256])
    errs = report.metric[:-1]
    assert all(b < a for a, b in zip(errs[:-1], errs[1:]))


def test_integrator_order_study_first_order():
    report = integrator_order_study([1.0, 0, 0], [0, 0.5, 0], ForceLaw.linear(1.0), ORIGIN,
                                    2 * math.pi, [100, 200, 400])
    assert report.log_log_slope == pytest.approx(-1.0, abs=0.1)


def test_report_dict_round_trip():
    report = chord_decay_study(Circle(radius=1.0), ORIGIN, 0.0, 1.0, NS)
    d = report.to_dict()
    back = ConvergenceReport.from_dict(d)
    assert back.to_dict() == d
    assert set(d) >= {"n", "max_chord", "extrapolated", "fit_order"}


def _square(x):
    return x * x


def test_parallel_map_matches_serial(monkeypatch):
    monkeypatch.setenv("POLYORB_THREADS", "0")
    serial = parallel_map(_square, range(10))
    monkeypatch.setenv("POLYORB_THREADS", "3")
    assert parallel_map(_square, range(10)) == serial


def test_parallel_study_is_identical(monkeypatch):
    curve = EllipseFocus(a=1.0, e=0.5)
    monkeypatch.setenv("POLYORB_THREADS", "0")
    a = chord_decay_study(curve, ORIGIN, 0.0, 2.0, NS).to_dict()
    monkeypatch.setenv("POLYORB_THREADS", "2")
    b = chord_decay_study(curve, ORIGIN, 0.0, 2.0, NS).to_dict()
    assert a == b

"""End-to-end acceptance checks, one test per criterion.

Each test records a PASS/FAIL line that the terminal summary prints after
the run.
"""

import math
import time

import numpy as np
import pytest

from conftest import half_perimeter
from polyorb.analysis import (
    appendix_a_bound_check,
    bound_study,
    chord_decay_study,
    coverage_convergence,
    extrapolate_to_zero,
    fit_order,
    study_curve,
)
from polyorb.construction import construct
from polyorb.force_measures import prop6_limit, ratio_convergence
from polyorb.geometry import Circle, EllipseCenter, EllipseFocus
from polyorb.integrator import ForceLaw, integrate

pytestmark = pytest.mark.acceptance

ORIGIN = np.zeros(3)
GRAVITY = ForceLaw.inverse_square(1.0)
CHORD_NS = [16, 32, 64, 128, 256]


def _random_runs(count=20, n=10_000, seed=20260):
    rng = np.random.default_rng(seed)
    runs = []
    while len(runs) < count:
        r0 = rng.normal(size=3)
        r0 *= rng.uniform(0.5, 2.0) / np.linalg.norm(r0)
        v0 = rng.normal(size=3)
        v0 *= rng.uniform(0.4, 1.2) / np.linalg.norm(v0)
        # keep the periapsis well away from the centre
        if np.linalg.norm(np.cross(r0, v0)) < 0.4:
            continue
        runs.append(integrate(r0, v0, GRAVITY, ORIGIN, 2 * math.pi, n))
    return runs


@pytest.fixture(scope="module")
def random_runs():
    start = time.perf_counter()
    runs = _random_runs()
    return runs, time.perf_counter() - start


def test_criterion_1_angular_momentum(criterion):
    r0 = [0.5, 0.0, 0.0]
    v0 = [0.0, math.sqrt(3.0), 0.0]  # a=1, e=0.5 from perihelion, GM=1
    start = time.perf_counter()
    traj = integrate(r0, v0, GRAVITY, ORIGIN, 2 * math.pi, 100_000)
    elapsed = time.perf_counter() - start
    lm = np.linalg.norm(traj.angular_momenta, axis=1)
    drift = float(np.max(np.abs(lm - lm[0])) / lm[0])
    ok = drift <= 1e-11 and elapsed < 1.0
    criterion(1, ok, f"max relative |L| drift {drift:.2e} (<=1e-11), {elapsed:.2f} s (<1 s)")
    assert drift <= 1e-11
    assert elapsed < 1.0


def test_criterion_2_planarity(criterion, random_runs):
    runs, elapsed = random_runs
    worst = 0.0
    for traj in runs:
        scale = float(np.max(np.linalg.norm(traj.positions, axis=1)))
        normal = traj.plane_normal()
        offsets = np.abs((traj.positions - traj.positions[0]) @ normal)
        worst = max(worst, float(np.max(offsets)) / scale)
    ok = worst <= 1e-9 and elapsed < 5.0
    criterion(2, ok, f"max out-of-plane residual {worst:.2e} x scale (<=1e-9), "
                     f"20 runs in {elapsed:.2f} s (<5 s)")
    assert worst <= 1e-9
    assert elapsed < 5.0


def test_criterion_3_equal_areas(criterion, random_runs):
    runs, _ = random_runs
    worst = max(traj.area_spread() for traj in runs)
    ok = worst <= 1e-11
    criterion(3, ok, f"max relative spread of swept areas {worst:.2e} (<=1e-11)")
    assert ok


def test_criterion_4_factor_two(criterion):
    cases = [(Circle(radius=1.0), "circle")] + [
        (EllipseFocus(a=1.0, e=e), f"focus e={e}") for e in (0.3, 0.6)]
    points = [0.0, 1.0, 2.5, 4.0]
    start = time.perf_counter()
    worst = 0.0
    for curve, _ in cases:
        for u in points:
            report = ratio_convergence(curve, ORIGIN, u, [64, 128, 256, 512])
            worst = max(worst, abs(report.extrapolated_limit - 2.0))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-3 and elapsed < 10.0
    criterion(4, ok, f"max |ratio - 2| {worst:.2e} (<=1e-3) over 12 points, "
                     f"{elapsed:.2f} s (<10 s)")
    assert worst <= 1e-3
    assert elapsed < 10.0


def test_criterion_5_chord_decay(criterion):
    cases = [
        ("circle", Circle(radius=1.0), 2 * math.pi),
        ("focus", EllipseFocus(a=1.0, e=0.5), None),
        ("center", EllipseCenter(a=2.0, b=1.0), None),
    ]
    slopes, bounds_ok, last_ok = {}, True, True
    for name, curve, L in cases:
        if L is None:
            L = half_perimeter(curve)
        slopes[name] = chord_decay_study(curve, ORIGIN, 0.0, L, CHORD_NS).log_log_slope
        bounds = bound_study(curve, ORIGIN, 0.0, L, CHORD_NS, margin=1.5)
        bounds_ok &= all(bounds.extras["satisfied"])
        wide = study_curve(curve, 0.0)
        orbit = construct(wide, ORIGIN, 0.0, L / CHORD_NS[-1], max_steps=CHORD_NS[-1])
        last_ok &= appendix_a_bound_check(orbit, wide, margin=1.0).satisfied
    slopes_ok = all(abs(s + 1.0) <= 0.05 for s in slopes.values())
    ok = slopes_ok and bounds_ok and last_ok
    detail = ", ".join(f"{k} {v:.3f}" for k, v in slopes.items())
    criterion(5, ok, f"max-chord slopes {detail} (-1 +/- 0.05); bound margin 1.5 all n: "
                     f"{bounds_ok}; margin 1.0 at n=256: {last_ok}")
    assert slopes_ok
    assert bounds_ok
    assert last_ok


def test_criterion_6_coverage(criterion):
    circle = Circle(radius=1.0)
    report = coverage_convergence(circle, ORIGIN, 0.0, 2 * math.pi, CHORD_NS)
    literal = max(abs(s - 2 * math.pi) for s in report.extras["chord_sum"])
    circle_ok = report.log_log_slope <= -2.0 and literal <= 1e-12
    ellipse_ok = True
    for curve in (EllipseFocus(a=1.0, e=0.5), EllipseCenter(a=2.0, b=1.0)):
        rep = coverage_convergence(curve, ORIGIN, 0.0, half_perimeter(curve), CHORD_NS)
        arcs = rep.extras["covered_arc"]
        steps = np.abs(np.diff(arcs))
        # successive changes shrink geometrically and the extrapolated limit settles
        hs = [1.0 / n for n in CHORD_NS]
        early = extrapolate_to_zero(hs[-4:-1], arcs[-4:-1])
        late = extrapolate_to_zero(hs[-3:], arcs[-3:])
        ellipse_ok &= bool(np.all(steps[1:] < 0.5 * steps[:-1]))
        ellipse_ok &= abs(late - early) <= 1e-4 * abs(late)
    ok = circle_ok and ellipse_ok
    criterion(6, ok, f"circle covered-arc order {-report.log_log_slope:.3f} (>=2), "
                     f"|sum s - 2pi| {literal:.1e}; ellipse coverage converges: "
                     f"{ellipse_ok}")
    assert circle_ok
    assert ellipse_ok


def test_criterion_7_hooke(criterion):
    ellipse = EllipseCenter(a=1.0, b=0.5)
    ns = [200, 400, 800, 1600]
    dist = []
    for n in ns:
        traj = integrate([1.0, 0.0, 0.0], [0.0, 0.5, 0.0], ForceLaw.linear(1.0), ORIGIN,
                         2 * math.pi, n)
        dist.append(float(np.max(ellipse.distance(traj.positions))))
    order = -fit_order(ns, dist).slope
    ok = abs(order - 1.0) <= 0.1
    criterion(7, ok, f"distance-to-ellipse order {order:.3f} (1.0 +/- 0.1)")
    assert ok


def test_criterion_8_force_law_recovery(criterion):
    us = np.linspace(0.1, 2 * math.pi + 0.1, 13)[:-1]
    kepler = EllipseFocus(a=1.0, e=0.5)
    k_vals = [prop6_limit(kepler, ORIGIN, u) * float(np.linalg.norm(kepler.evaluate(u))) ** 2
              for u in us]
    hooke = EllipseCenter(a=2.0, b=1.0)
    h_vals = [prop6_limit(hooke, ORIGIN, u) / float(np.linalg.norm(hooke.evaluate(u)))
              for u in us]
    k_spread = float(np.ptp(k_vals) / np.mean(k_vals))
    h_spread = float(np.ptp(h_vals) / np.mean(h_vals))
    ok = k_spread <= 1e-4 and h_spread <= 1e-4
    criterion(8, ok, f"relative spread of measure*SP^2 {k_spread:.1e}, measure/SP "
                     f"{h_spread:.1e} (<=1e-4)")
    assert ok


def test_criterion_9_regular_polygon(criterion):
    worst = 0.0
    for n in (6, 12, 24):
        orbit = construct(Circle(radius=1.0), ORIGIN, 0.0, 2 * math.sin(math.pi / n),
                          max_steps=n)
        k = np.arange(len(orbit))
        exact = np.column_stack([np.cos(2 * math.pi * k / n), np.sin(2 * math.pi * k / n),
                                 np.zeros(len(k))])
        assert len(orbit) == n + 1
        worst = max(worst, float(np.max(np.abs(orbit.vertices - exact))))
    ok = worst <= 1e-12
    criterion(9, ok, f"max vertex deviation from regular n-gon {worst:.1e} (<=1e-12)")
    assert ok

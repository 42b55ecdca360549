"""Convergence studies and order fitting.

The studies sweep the number of chords ``n`` (first chord ``L/n``) or the
number of integrator steps and summarise a metric per ``n`` in a
:class:`ConvergenceReport`. All sweeps may fan out over processes, capped
by the ``POLYORB_THREADS`` environment variable (unset or ``0`` runs
serially); results are always returned in ``n`` order.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from typing import NamedTuple, Sequence

import numpy as np
from scipy import integrate as sp_integrate
from scipy import stats

from .construction import PolygonOrbit, construct
from .geometry import Circle, PlanarCurve, vector3
from .integrator import ForceLaw, integrate

__all__ = [
    "FitError",
    "OrderFit",
    "ConvergenceReport",
    "BoundCheck",
    "fit_order",
    "extrapolate_to_zero",
    "richardson",
    "parallel_map",
    "study_curve",
    "chord_decay_study",
    "appendix_a_bound_check",
    "bound_study",
    "coverage_convergence",
    "integrator_order_study",
    "BOUND_MARGIN",
]

BOUND_MARGIN = 1.5
SIGN_FLAG_THRESHOLD = 0.10


class FitError(ValueError):
    pass


class OrderFit(NamedTuple):
    slope: float
    intercept: float
    residual: float
    dropped: int = 0
    slope_ci: float = 0.0


def fit_order(n_values, metric, confidence: float = 0.95) -> OrderFit:
    """Least-squares fit of ``log(metric)`` against ``log(n)``.

    Zero metric entries are dropped and counted in ``dropped``; negative
    ones raise :class:`FitError`, as does having fewer than three usable
    points. ``residual`` is the RMS deviation of the fit in log space and
    ``slope_ci`` the half-width of the ``confidence`` band on the slope.
    """
    n = np.asarray(n_values, dtype=float)
    m = np.asarray(metric, dtype=float)
    if n.shape != m.shape:
        raise FitError("n_values and metric differ in length")
    if np.any(n <= 0) or not np.all(np.isfinite(n)):
        raise FitError("n values must be positive and finite")
    if not np.all(np.isfinite(m)):
        raise FitError("metric contains non-finite values")
    if np.any(m < 0):
        raise FitError("metric must be non-negative for a log-log fit")
    keep = m > 0
    dropped = int(np.sum(~keep))
    if np.sum(keep) < 3:
        raise FitError(f"need at least 3 positive metric values, got {int(np.sum(keep))}")
    x, y = np.log(n[keep]), np.log(m[keep])
    res = stats.linregress(x, y)
    resid = y - (res.intercept + res.slope * x)
    rms = float(np.sqrt(np.mean(resid**2)))
    dof = len(x) - 2
    ci = float(stats.t.ppf(0.5 + confidence / 2, dof) * res.stderr) if dof > 0 else math.inf
    return OrderFit(float(res.slope), float(res.intercept), rms, dropped, ci)


def extrapolate_to_zero(steps, values) -> float:
    """Value at step 0 of the polynomial through ``(steps, values)`` (Neville).

    For steps refined by a factor of 2 this is Richardson extrapolation
    removing error terms of orders 1, 2, ... in turn.
    """
    h = np.asarray(steps, dtype=float)
    p = np.array(values, dtype=float)
    if len(h) != len(p) or len(h) == 0:
        raise ValueError("steps and values must be non-empty and of equal length")
    for k in range(1, len(h)):
        p[k:] = (h[k:] * p[k - 1:-1] - h[:-k] * p[k:]) / (h[k:] - h[:-k])
    return float(p[-1])


def richardson(values, ratio: float = 2.0, orders: Sequence[int] = (1, 2)) -> float:
    """Richardson tableau on ``values`` ordered coarse to fine.

    Step sizes shrink by ``ratio`` between entries; level ``k`` removes an
    error term of order ``orders[k-1]``. Uses the last ``len(orders) + 1``
    values.
    """
    vals = list(map(float, values))[-(len(orders) + 1):]
    if len(vals) < len(orders) + 1:
        raise ValueError(f"need {len(orders) + 1} values for orders {tuple(orders)}")
    table = vals
    for p in orders:
        f = ratio**p
        table = [(f * b - a) / (f - 1.0) for a, b in zip(table[:-1], table[1:])]
    return table[-1]


def parallel_map(fn, items):
    """``map`` over processes, capped by ``POLYORB_THREADS`` (0 or unset: serial)."""
    items = list(items)
    try:
        workers = int(os.environ.get("POLYORB_THREADS", "0"))
    except ValueError:
        workers = 0
    if workers <= 0 or len(items) < 2:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items))


@dataclass
class ConvergenceReport:
    """A metric tabulated against ``n`` with its fitted log-log slope."""

    n_values: list
    metric: list
    log_log_slope: float
    slope_ci: float
    extrapolated_limit: float
    residual: float = 0.0
    study: str = ""
    metric_name: str = "metric"
    dropped: int = 0
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        _check_n_values(self.n_values)

    def to_dict(self) -> dict:
        out = {
            "study": self.study,
            "n": [int(v) for v in self.n_values],
            self.metric_name: [float(v) for v in self.metric],
            "extrapolated": float(self.extrapolated_limit),
            "fit_order": float(self.log_log_slope),
            "slope_ci": float(self.slope_ci),
            "residual": float(self.residual),
            "dropped": int(self.dropped),
        }
        if self.extras:
            out["extras"] = self.extras
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "ConvergenceReport":
        fixed = {"study", "n", "extrapolated", "fit_order", "slope_ci", "residual",
                 "dropped", "extras"}
        names = [k for k in d if k not in fixed]
        if len(names) != 1:
            raise ValueError(f"cannot identify metric column among {names}")
        name = names[0]
        return cls(list(d["n"]), list(d[name]), d["fit_order"], d["slope_ci"],
                   d["extrapolated"], d.get("residual", 0.0), d.get("study", ""), name,
                   d.get("dropped", 0), d.get("extras", {}))


def _check_n_values(n_values):
    n = list(n_values)
    if len(n) < 3:
        raise FitError(f"a convergence study needs at least 3 n values, got {len(n)}")
    if any(int(v) != v or v < 1 for v in n):
        raise FitError("n values must be positive integers")
    if any(b <= a for a, b in zip(n[:-1], n[1:])):
        raise FitError("n values must be strictly increasing")


def _report(study, name, n_values, metric, limit, extras=None) -> ConvergenceReport:
    try:
        fit = fit_order(n_values, metric)
        slope, ci, resid, dropped = fit.slope, fit.slope_ci, fit.residual, fit.dropped
    except FitError:
        slope = ci = resid = float("nan")
        dropped = int(np.sum(np.asarray(metric) == 0))
    return ConvergenceReport(list(n_values), [float(m) for m in metric], slope, ci, limit,
                             resid, study, name, dropped, extras or {})


def study_curve(curve: PlanarCurve, u_start: float, periods: int = 3) -> PlanarCurve:
    """Widen a closed curve's domain so an ``n``-chord polygon never runs off its end."""
    if not curve.periodic:
        return curve
    lo, hi = curve.domain
    return curve.with_domain(min(lo, u_start), max(hi, u_start + periods * 2 * math.pi))


def _build(curve, center, u_start, L, n):
    return construct(curve, center, u_start, L / n, max_steps=n)


def _orbits(curve, center, u_start, L, n_values):
    _check_n_values(n_values)
    curve = study_curve(curve, u_start)
    return curve, parallel_map(partial(_build, curve, vector3(center), u_start, L), n_values)


def chord_decay_study(curve: PlanarCurve, center, u_start: float, L: float,
                      n_values) -> ConvergenceReport:
    """Longest chord of the ``n``-chord polygon with first chord ``L/n``."""
    _, orbits = _orbits(curve, center, u_start, L, n_values)
    metric = [float(np.max(o.chords)) for o in orbits]
    hs = [1.0 / n for n in n_values]
    limit = extrapolate_to_zero(hs[-3:], metric[-3:])
    return _report("chords", "max_chord", n_values, metric, limit,
                   {"chord_count": [len(o.chords) for o in orbits],
                    "termination": [o.termination.value for o in orbits]})


class BoundCheck(NamedTuple):
    lhs: float
    rhs: float
    satisfied: bool
    signed_sum: float
    max_curvature: float
    margin: float
    sign_flag: bool


def appendix_a_bound_check(orbit: PolygonOrbit, curve: PlanarCurve,
                           margin: float = BOUND_MARGIN) -> BoundCheck:
    """Compare the accumulated chord growth with its curvature bound.

    ``lhs`` is the sum of ``|e_k|`` over successive chord differences;
    ``rhs = s1^2 (n - 1) c margin`` with ``n`` chords, first chord ``s1``
    and ``c`` the maximum curvature over the traversed parameter range.
    ``sign_flag`` is set when the signed and absolute sums differ by more
    than 10%.
    """
    e = orbit.chord_differences
    n = len(orbit.chords)
    if n == 0:
        return BoundCheck(0.0, 0.0, True, 0.0, 0.0, margin, False)
    s1 = float(orbit.chords[0])
    c = curve.max_curvature(orbit.params[0], orbit.params[-1])
    lhs = float(np.sum(np.abs(e)))
    signed = float(np.sum(e))
    rhs = s1**2 * (n - 1) * c * margin
    flag = lhs > 0 and abs(lhs - abs(signed)) > SIGN_FLAG_THRESHOLD * lhs
    return BoundCheck(lhs, rhs, lhs <= rhs, signed, c, margin, bool(flag))


def bound_study(curve: PlanarCurve, center, u_start: float, L: float, n_values,
                margin: float = BOUND_MARGIN) -> ConvergenceReport:
    """Bound check per ``n``; the metric is the left-hand side ``sum |e_k|``."""
    curve, orbits = _orbits(curve, center, u_start, L, n_values)
    checks = [appendix_a_bound_check(o, curve, margin) for o in orbits]
    metric = [c.lhs for c in checks]
    return _report("bound", "lhs", n_values, metric, 0.0, {
        "rhs": [c.rhs for c in checks],
        "satisfied": [c.satisfied for c in checks],
        "signed_sum": [c.signed_sum for c in checks],
        "sign_flag": [c.sign_flag for c in checks],
        "max_curvature": [c.max_curvature for c in checks],
        "margin": margin,
    })


def _centered_circle(curve, center) -> bool:
    return isinstance(curve, Circle) and np.allclose(vector3(center), curve.plane_point,
                                                     rtol=0, atol=1e-12 * curve.radius)


def coverage_convergence(curve: PlanarCurve, center, u_start: float, L: float,
                         n_values) -> ConvergenceReport:
    """Arc length covered by the ``n``-chord polygon against its limit.

    The reference is ``L`` for a circle about its own centre and otherwise
    the covered arc of the largest ``n``. Chord sums are reported in
    ``extras`` alongside the covered arcs.
    """
    _check_n_values(n_values)
    if L == 0:
        zeros = [0.0] * len(n_values)
        return _report("coverage", "coverage_error", n_values, zeros, 0.0,
                       {"covered_arc": zeros, "chord_sum": zeros, "reference": 0.0})
    if L < 0:
        raise ValueError("L must be non-negative")
    curve, orbits = _orbits(curve, center, u_start, L, n_values)
    arcs = [curve.arc_length(o.params[0], o.params[-1]) for o in orbits]
    sums = [float(np.sum(o.chords)) for o in orbits]
    reference = float(L) if _centered_circle(curve, center) else arcs[-1]
    metric = [abs(a - reference) for a in arcs]
    return _report("coverage", "coverage_error", n_values, metric, reference,
                   {"covered_arc": arcs, "chord_sum": sums, "reference": reference,
                    "chord_count": [len(o.chords) for o in orbits]})


def _reference_solution(r0, v0, law: ForceLaw, center, T):
    center = vector3(center)

    def rhs(t, y):
        return np.concatenate([y[3:], law.acceleration(y[:3], center)])

    sol = sp_integrate.solve_ivp(rhs, (0.0, T), np.concatenate([r0, v0]), method="DOP853",
                                 rtol=1e-12, atol=1e-13, dense_output=True)
    if not sol.success:
        raise RuntimeError(f"reference ODE solve failed: {sol.message}")
    return sol.sol


def _position_error(r0, v0, law, center, T, reference, n):
    traj = integrate(r0, v0, law, center, T, n)
    exact = reference(traj.times)[:3].T
    return float(np.max(np.linalg.norm(traj.positions - exact, axis=1)))


def integrator_order_study(r0, v0, law: ForceLaw, center, T: float,
                           n_values) -> ConvergenceReport:
    """Global position error of the impulse integrator against a tight ODE solution."""
    _check_n_values(n_values)
    r0, v0 = vector3(r0), vector3(v0)
    reference = _reference_solution(r0, v0, law, center, T)
    metric = [_position_error(r0, v0, law, center, T, reference, n) for n in n_values]
    return _report("order", "max_position_error", n_values, metric, 0.0)

"""Discrete and continuous force measures on a curve.

The polygon measure at a vertex is the deflection divided by the square of
twice the triangle area, ``d / areas2**2``. The tangent-line measure at a
curve point ``P`` uses a nearby point ``Q`` and the foot ``R`` of the line
through ``Q`` parallel to ``SP`` on the tangent at ``P``:
``QR / (SP * QT)**2`` with ``QT`` the distance from ``Q`` to line ``SP``.
As chords and offsets shrink, the polygon measure tends to twice the
tangent-line measure, because the chord extension overshoots the tangent
by the same amount again.

Both measures are proportional to the central force with the constant set
to 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .analysis import ConvergenceReport, _check_n_values, _report, extrapolate_to_zero
from .construction import (
    TANGENCY_TOL,
    PolygonOrbit,
    RadialTangencyError,
    RootFindingError,
    Termination,
    _tangency_angle,
    first_chord_vertex,
    next_vertex,
)
from .geometry import PlanarCurve, vector3

__all__ = [
    "ForceMeasureSample",
    "prop1_measure",
    "prop6_measure",
    "prop6_limit",
    "local_polygon",
    "sample",
    "ratio_convergence",
]

DEFAULT_OFFSET = 1e-2


@dataclass(frozen=True)
class ForceMeasureSample:
    measure_p1: float
    measure_p6: float
    scale: float
    u: float = float("nan")

    @property
    def ratio(self) -> float:
        return self.measure_p1 / self.measure_p6


def prop1_measure(orbit: PolygonOrbit, j: int) -> float:
    """``d_j / areas2_j**2`` at interior vertex ``j`` (zero-based)."""
    if not 1 <= j <= len(orbit) - 2:
        raise IndexError(f"vertex {j} is not interior (valid: 1..{len(orbit) - 2})")
    return float(orbit.deflections[j - 1] / orbit.areas2[j] ** 2)


def _local_curve(curve: PlanarCurve, u: float) -> PlanarCurve:
    if curve.periodic:
        return curve.with_domain(min(curve.domain[0], u - 2 * math.pi),
                                 max(curve.domain[1], u + 2 * math.pi))
    return curve


def _offset_parameter(curve: PlanarCurve, u: float, h: float) -> float:
    """Parameter of the point at signed arc length ``h`` from ``u``."""
    guess = h / float(curve.speed(u))
    lo, hi = curve.domain

    def fun(t):
        return curve.arc_length(u, t) - h

    a, b = u, u + 2 * guess
    while (fun(b) < 0) == (h > 0):
        b = u + 2 * (b - u)
        if not lo <= b <= hi:
            raise ValueError(f"arc offset {h} leaves the domain from u={u}")
    return optimize.brentq(fun, min(a, b), max(a, b), xtol=1e-15, rtol=4 * np.finfo(float).eps)


def prop6_measure(curve: PlanarCurve, center, u: float, h: float) -> float:
    """Tangent-line measure ``QR / (SP * QT)**2`` with ``Q`` at arc offset ``h``."""
    if h == 0:
        raise ValueError("arc offset must be nonzero")
    center = vector3(center)
    curve = _local_curve(curve, u)
    if _tangency_angle(curve, center, u) < TANGENCY_TOL:
        raise RadialTangencyError(f"radius is tangent to the curve at u={u!r}", u=u)
    p = curve.evaluate(u)
    t_hat = curve.tangent(u)
    q = curve.evaluate(_offset_parameter(curve, u, h))
    sp_vec = center - p
    sp = float(np.linalg.norm(sp_vec))
    # Q - P = tau * t_hat + lam * (S - P), solved in the plane
    basis = np.column_stack([t_hat, sp_vec])
    (tau, lam), *_ = np.linalg.lstsq(basis, q - p, rcond=None)
    qr = abs(lam) * sp
    qt = float(np.linalg.norm(np.cross(q - p, sp_vec))) / sp
    return qr / (sp * qt) ** 2


def prop6_limit(curve: PlanarCurve, center, u: float, h0: float = DEFAULT_OFFSET,
                levels: int = 3) -> float:
    """Tangent-line measure extrapolated to zero offset from ``h0, h0/2, ...``."""
    hs = [h0 / 2**k for k in range(levels)]
    vals = [prop6_measure(curve, center, u, h) for h in hs]
    return extrapolate_to_zero(hs, vals)


def local_polygon(curve: PlanarCurve, center, u: float, chord: float) -> PolygonOrbit:
    """Three-vertex polygon whose middle vertex sits exactly at ``R(u)``.

    The first chord ends at ``u`` and has length ``chord``; the third vertex
    follows from one construction step.
    """
    center = vector3(center)
    curve = _local_curve(curve, u)
    if _tangency_angle(curve, center, u) < TANGENCY_TOL:
        raise RadialTangencyError(f"radius is tangent to the curve at u={u!r}", u=u)
    u_prev = first_chord_vertex(curve, u, chord, direction=-1)
    if u_prev is None:
        raise RootFindingError(f"no point at chord {chord} behind u={u}")
    p_prev, p_curr = curve.evaluate(u_prev), curve.evaluate(u)
    nxt = next_vertex(curve, center, p_prev, p_curr, u, u_prev)
    if nxt is None:
        raise RootFindingError(f"deflection line misses the curve after u={u}")
    return PolygonOrbit([u_prev, u, nxt.u], [p_prev, p_curr, nxt.point], center,
                        Termination.MAX_STEPS)


def sample(curve: PlanarCurve, center, u: float, chord: float,
           h: float | None = None) -> ForceMeasureSample:
    """Both measures at ``R(u)``: polygon measure at ``chord``, tangent measure at offset ``h``.

    ``h=None`` gives the extrapolated zero-offset tangent measure.
    """
    orbit = local_polygon(curve, center, u, chord)
    p1 = prop1_measure(orbit, 1)
    p6 = prop6_limit(curve, center, u) if h is None else prop6_measure(curve, center, u, h)
    return ForceMeasureSample(p1, p6, chord, u)


def ratio_convergence(curve: PlanarCurve, center, u: float, n_values, length: float = 1.0,
                      h0: float = DEFAULT_OFFSET) -> ConvergenceReport:
    """Polygon-to-tangent measure ratio at ``R(u)`` for chords ``length / n``.

    The ratio for each ``n`` uses the zero-offset tangent measure; the
    limit is extrapolated polynomially in ``1/n`` from the three largest
    ``n`` (Richardson for a factor-2 sweep). The fitted slope is that of
    ``|ratio - limit|``, the finite-``n`` deviation order.
    """
    _check_n_values(n_values)
    p6 = prop6_limit(curve, center, u, h0)
    p1 = [prop1_measure(local_polygon(curve, center, u, length / n), 1) for n in n_values]
    ratios = [v / p6 for v in p1]
    hs = [1.0 / n for n in n_values]
    limit = extrapolate_to_zero(hs[-3:], ratios[-3:])
    deviation = [abs(r - limit) for r in ratios]
    report = _report("ratio", "ratio", n_values, ratios, limit,
                     {"prop1": p1, "prop6": p6, "u": u, "length": length,
                      "deviation": deviation})
    dev_fit = _report("ratio", "deviation", n_values, deviation, 0.0)
    report.log_log_slope = dev_fit.log_log_slope
    report.slope_ci = dev_fit.slope_ci
    report.residual = dev_fit.residual
    report.dropped = dev_fit.dropped
    return report

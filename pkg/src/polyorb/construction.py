"""Curve-constrained polygon construction.

Starting from a vertex on a fixed planar curve and a first chord of given
length, each new vertex is found by extending the current chord by its own
length and then sliding from the extension point, parallel to the current
radius towards the force centre, until the curve is hit. The polygon's
triangles with the centre all have equal area, and every vertex stays in
the plane of the first triangle.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import optimize

from .geometry import PlanarCurve, vector3

__all__ = [
    "Termination",
    "ConstructionError",
    "RadialTangencyError",
    "RootFindingError",
    "PolygonOrbit",
    "VertexStep",
    "construct",
    "first_chord_vertex",
    "next_vertex",
    "coverage_length",
]

TANGENCY_TOL = 1e-6  # rad
PARAM_XTOL = 1e-14
MAX_ITER = 100
MARCH_FRACTION = 0.25  # marching step as a fraction of the previous parameter increment


class Termination(str, enum.Enum):
    REACHED_ENDPOINT = "ReachedEndpoint"
    NO_INTERSECTION = "NoIntersection"
    RADIAL_TANGENCY = "RadialTangency"
    MAX_STEPS = "MaxSteps"


class ConstructionError(RuntimeError):
    """Base class for construction failures."""


class RadialTangencyError(ConstructionError):
    """The radius from the centre is (nearly) tangent to the curve.

    ``orbit`` holds the polygon built up to and including the offending
    vertex, with termination ``RadialTangency``.
    """

    def __init__(self, message, orbit=None, u=None):
        super().__init__(message)
        self.orbit = orbit
        self.u = u


class RootFindingError(ConstructionError):
    """The intersection solver did not converge."""


class VertexStep(NamedTuple):
    u: float
    point: np.ndarray
    deflection: np.ndarray


def _angle_between(a, b) -> float:
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        return float("nan")
    # atan2 form stays accurate near 0 and pi
    return float(math.atan2(np.linalg.norm(np.cross(a, b)), np.dot(a, b)))


@dataclass(frozen=True, eq=False)
class PolygonOrbit:
    """Vertices of a constructed polygon plus the derived per-step series.

    Everything except ``params``, ``vertices``, ``center`` and
    ``termination`` is recomputed from those four, so a deserialized orbit
    is bit-identical to the original.

    Indexing is zero-based: ``chords[k] = |P[k+1] - P[k]|`` and
    ``areas2[k]`` is twice the area of triangle ``(S, P[k], P[k+1])``.
    Deflection series are indexed by interior vertex, ``deflections[k]``
    belonging to vertex ``k + 1``.
    """

    params: np.ndarray
    vertices: np.ndarray
    center: np.ndarray
    termination: Termination
    chords: np.ndarray = field(init=False)
    areas2: np.ndarray = field(init=False)
    deflection_vectors: np.ndarray = field(init=False)
    deflections: np.ndarray = field(init=False)
    deflection_angles: np.ndarray = field(init=False)

    def __post_init__(self):
        params = np.asarray(self.params, dtype=float).reshape(-1)
        verts = np.asarray(self.vertices, dtype=float).reshape(-1, 3)
        if len(params) != len(verts) or len(verts) == 0:
            raise ValueError("params and vertices must be non-empty and of equal length")
        center = vector3(self.center)
        set_ = object.__setattr__
        set_(self, "params", params)
        set_(self, "vertices", verts)
        set_(self, "center", center)
        set_(self, "termination", Termination(self.termination))

        steps = np.diff(verts, axis=0)
        set_(self, "chords", np.linalg.norm(steps, axis=1))
        set_(self, "areas2", np.linalg.norm(np.cross(verts[:-1] - center, steps), axis=1))
        if len(verts) >= 3:
            extension = verts[1:-1] + (verts[1:-1] - verts[:-2])
            dvec = verts[2:] - extension
            secant = verts[2:] - verts[:-2]
            angles = np.array([_angle_between(d, w) for d, w in zip(dvec, secant)])
        else:
            dvec = np.zeros((0, 3))
            angles = np.zeros(0)
        set_(self, "deflection_vectors", dvec)
        set_(self, "deflections", np.linalg.norm(dvec, axis=1))
        set_(self, "deflection_angles", angles)

    def __len__(self):
        return len(self.vertices)

    @property
    def chord_differences(self) -> np.ndarray:
        """``e[k] = chords[k+1] - chords[k]``."""
        return np.diff(self.chords)

    def chords_from_differences(self) -> np.ndarray:
        """Rebuild every chord as the first chord plus the running sum of differences."""
        if len(self.chords) == 0:
            return self.chords.copy()
        # sequential left-to-right sum; each partial sum is then an exact chord
        return np.cumsum(np.concatenate([self.chords[:1], self.chord_differences]))

    def sagitta_estimates(self, curve: PlanarCurve) -> np.ndarray:
        """Leading-order deflection ``curvature * s^2 / sin(theta)`` at interior vertices.

        Uses the chord following each vertex; agrees with ``deflections``
        only to leading order in the chord length.
        """
        if len(self.deflections) == 0:
            return np.zeros(0)
        kappa = curve.curvature(self.params[1:-1])
        return kappa * self.chords[1:] ** 2 / np.sin(self.deflection_angles)

    def radius_angles(self) -> np.ndarray:
        """Angle between each interior deflection and its radius towards the centre."""
        radii = self.center - self.vertices[1:-1]
        return np.array([_angle_between(d, r) for d, r in zip(self.deflection_vectors, radii)])

    def coverage(self) -> float:
        return coverage_length(self)


def coverage_length(orbit: PolygonOrbit) -> float:
    """Total chord length of the polygon."""
    if len(orbit) == 0:
        raise ValueError("empty orbit")
    return float(np.sum(orbit.chords))


def _solve_forward(fun, u0, step, u_max, *, xtol=PARAM_XTOL, dfun=None, atol=0.0):
    """Smallest root of ``fun`` in ``(u0, u_max]``, bracketed by marching.

    Returns ``None`` if no sign change is found before ``u_max``. A value at
    ``u_max`` that vanishes to rounding counts as a root there.
    """
    if step <= 0 or not math.isfinite(step):
        raise RootFindingError(f"invalid marching step {step}")
    lo = u0
    f_lo = fun(lo)
    if f_lo == 0.0:
        lo = min(u0 + 1e-3 * step, u_max)
        f_lo = fun(lo)
    while lo < u_max:
        hi = min(lo + step, u_max)
        f_hi = fun(hi)
        if f_hi == 0.0:
            return hi
        if np.sign(f_hi) != np.sign(f_lo):
            try:
                root, info = optimize.brentq(fun, lo, hi, xtol=xtol, maxiter=MAX_ITER,
                                             full_output=True)
            except RuntimeError as exc:
                raise RootFindingError(
                    f"bracketed root in [{lo!r}, {hi!r}] did not converge: {exc}") from exc
            return _polish(fun, dfun, root, lo, hi)
        lo, f_lo = hi, f_hi
    if abs(f_lo) <= atol:
        return u_max
    return None


def _polish(fun, dfun, root, lo, hi):
    """Newton (or secant) refinement that is kept only if it lowers ``|fun|``."""
    best, f_best = root, abs(fun(root))
    u = root
    for _ in range(3):
        if f_best == 0.0:
            break
        fu = fun(u)
        if dfun is not None:
            slope = dfun(u)
        else:
            h = max(abs(u), 1.0) * 1e-8
            slope = (fun(u + h) - fun(u - h)) / (2 * h)
        if slope == 0.0:
            break
        u = u - fu / slope
        if not lo <= u <= hi:
            break
        fu = abs(fun(u))
        if fu < f_best:
            best, f_best = u, fu
        else:
            break
    return best


def first_chord_vertex(curve: PlanarCurve, u_start: float, s1: float, direction: int = 1):
    """Curve parameter at chordal distance ``s1`` from ``R(u_start)``.

    ``direction=+1`` searches forward in ``u``, ``-1`` backward. Returns
    ``None`` when no such point exists inside the domain.
    """
    p0 = curve.evaluate(u_start)
    speed = float(curve.speed(u_start))
    if speed == 0.0:
        raise RootFindingError(f"vanishing speed at u={u_start}")
    step = MARCH_FRACTION * s1 / speed
    lo, hi = curve.domain
    if direction > 0:
        fun = lambda u: float(np.linalg.norm(curve.evaluate(u) - p0)) - s1  # noqa: E731
        return _solve_forward(fun, u_start, step, hi)
    fun = lambda t: float(np.linalg.norm(curve.evaluate(-t) - p0)) - s1  # noqa: E731
    root = _solve_forward(fun, -u_start, step, -lo)
    return None if root is None else -root


def _tangency_angle(curve, center, u) -> float:
    radius = center - curve.evaluate(u)
    if np.linalg.norm(radius) <= 1e-14 * curve.scale:
        return 0.0
    ang = _angle_between(radius, curve.tangent(u))
    return min(ang, math.pi - ang)


def next_vertex(curve: PlanarCurve, center, p_prev, p_curr, u_curr: float,
                u_prev: float | None = None) -> VertexStep | None:
    """One construction step from the chord ``p_prev -> p_curr``.

    The chord is extended past ``p_curr`` by its own length to ``c``; the
    next vertex is where the line through ``c`` parallel to
    ``center - p_curr`` meets the curve, taking the first crossing with
    parameter beyond ``u_curr``. Returns ``None`` if the line misses the
    curve inside the domain.
    """
    center = np.asarray(center, dtype=float)
    p_prev = np.asarray(p_prev, dtype=float)
    p_curr = np.asarray(p_curr, dtype=float)
    chord = p_curr - p_prev
    c = p_curr + chord
    radial = center - p_curr
    rnorm = np.linalg.norm(radial)
    if rnorm == 0.0:
        raise ConstructionError("vertex coincides with the force centre")
    rhat = radial / rnorm
    nhat = curve.plane_normal
    # signed in-plane distance of R(u) from the deflection line
    w = np.cross(rhat, nhat)

    def fun(u):
        return float(np.dot(curve.evaluate(u) - c, w))

    def dfun(u):
        return float(np.dot(curve.derivative(u), w))

    if u_prev is not None and u_curr > u_prev:
        du = u_curr - u_prev
    else:
        du = np.linalg.norm(chord) / float(curve.speed(u_curr))
    root = _solve_forward(fun, u_curr, MARCH_FRACTION * du, curve.domain[1], dfun=dfun,
                          atol=1e-13 * curve.scale)
    if root is None:
        return None
    point = curve.evaluate(root)
    # off-plane centre: the deflection line leaves the plane and cannot meet the curve
    miss = np.linalg.norm(np.cross(point - c, rhat))
    if miss > 1e-9 * max(curve.scale, rnorm):
        return None
    return VertexStep(float(root), point, point - c)


def construct(curve: PlanarCurve, center, u_start: float, s1: float,
              max_steps: int = 10_000) -> PolygonOrbit:
    """Build the polygon from ``u_start`` with first chord length ``s1``.

    At most ``max_steps`` chords are produced. A deflection line that misses
    the curve ends the construction normally with ``NoIntersection``;
    landing on the end of the domain gives ``ReachedEndpoint``.

    Raises:
        RadialTangencyError: a vertex where the radius is within 1e-6 rad of
            the tangent; the partial polygon is attached to the exception.
        RootFindingError: the intersection solver failed to converge.
    """
    center = vector3(center)
    if not math.isfinite(s1) or s1 < 0:
        raise ValueError(f"first chord length must be positive, got {s1}")
    if max_steps < 0:
        raise ValueError("max_steps must be non-negative")
    if not curve.contains(u_start):
        raise ValueError(f"u_start={u_start} outside domain {curve.domain}")

    params = [float(u_start)]
    verts = [curve.evaluate(u_start)]

    def finish(term):
        return PolygonOrbit(np.array(params), np.array(verts), center, term)

    def check_tangency(u):
        if _tangency_angle(curve, center, u) < TANGENCY_TOL:
            raise RadialTangencyError(
                f"radius is tangent to the curve at u={u!r}",
                orbit=finish(Termination.RADIAL_TANGENCY), u=u)

    check_tangency(u_start)
    if s1 == 0.0 or max_steps == 0:
        return finish(Termination.MAX_STEPS)

    u_end = curve.domain[1]
    end_tol = 1e-12 * max(1.0, abs(u_end))
    u2 = first_chord_vertex(curve, u_start, s1)
    if u2 is None:
        return finish(Termination.NO_INTERSECTION)
    params.append(u2)
    verts.append(curve.evaluate(u2))
    check_tangency(u2)

    while True:
        if params[-1] >= u_end - end_tol:
            return finish(Termination.REACHED_ENDPOINT)
        if len(params) - 1 >= max_steps:
            return finish(Termination.MAX_STEPS)
        step = next_vertex(curve, center, verts[-2], verts[-1], params[-1], params[-2])
        if step is None:
            return finish(Termination.NO_INTERSECTION)
        params.append(step.u)
        verts.append(step.point)
        check_tangency(step.u)

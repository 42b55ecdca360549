"""Vectors and parametric planar curves.

Vectors are plain ``float64`` numpy arrays of shape ``(3,)``. Curves are
described by a 2D parameterization in a local frame ``(e1, e2)`` spanning
their plane; every 3D point is ``plane_point + x*e1 + y*e2``, so planarity
holds by construction and is checked rather than assumed.
"""

from __future__ import annotations

import csv
import math
import dataclasses
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy import integrate, interpolate

__all__ = [
    "DomainError",
    "DegenerateCurveError",
    "vector3",
    "triangle_area2",
    "PlanarCurve",
    "Circle",
    "EllipseCenter",
    "EllipseFocus",
    "Segment",
    "CustomSampled",
]

TWO_PI = 2.0 * math.pi


class DomainError(ValueError):
    """Curve parameter outside the curve's domain."""


class DegenerateCurveError(ValueError):
    """Vanishing derivative or otherwise ill-posed curve geometry."""


def vector3(*components) -> np.ndarray:
    """Build a finite 3-vector from ``(x, y, z)`` or a single sequence."""
    if len(components) == 1:
        components = tuple(components[0])
    v = np.asarray(components, dtype=float)
    if v.shape != (3,):
        raise ValueError(f"expected 3 components, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"non-finite vector component in {v}")
    return v


def triangle_area2(a, b, c) -> float:
    """Twice the area of triangle ``abc``, i.e. ``|(b-a) x (c-a)|``."""
    a = np.asarray(a, dtype=float)
    return float(np.linalg.norm(np.cross(np.asarray(b) - a, np.asarray(c) - a)))


def _frame(normal, x_axis):
    n = vector3(normal)
    nn = np.linalg.norm(n)
    if nn == 0.0:
        raise ValueError("plane normal must be nonzero")
    n = n / nn
    e1 = vector3(x_axis)
    e1 = e1 - np.dot(e1, n) * n
    if np.linalg.norm(e1) < 1e-12:
        raise ValueError("x_axis must not be parallel to the plane normal")
    e1 = e1 / np.linalg.norm(e1)
    e2 = np.cross(n, e1)
    return n, e1, e2


@dataclass(frozen=True, eq=False)
class PlanarCurve:
    """Base class for a curve ``R(u)`` lying in a plane.

    Subclasses supply the local 2D parameterization through ``_local``,
    ``_local_d1`` and ``_local_d2``; each takes scalar or array ``u`` and
    returns an array of shape ``(2,) + u.shape``.
    """

    domain: tuple[float, float] = (0.0, TWO_PI)
    plane_point: np.ndarray = field(default_factory=lambda: np.zeros(3))
    plane_normal: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))
    x_axis: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0]))

    periodic = False
    kind = "curve"

    def __post_init__(self):
        u0, u1 = (float(x) for x in self.domain)
        if not (math.isfinite(u0) and math.isfinite(u1) and u0 < u1):
            raise ValueError(f"invalid domain {self.domain}")
        n, e1, e2 = _frame(self.plane_normal, self.x_axis)
        object.__setattr__(self, "domain", (u0, u1))
        object.__setattr__(self, "plane_point", vector3(self.plane_point))
        object.__setattr__(self, "plane_normal", n)
        object.__setattr__(self, "x_axis", e1)
        object.__setattr__(self, "_e2", e2)

    # -- local parameterization, overridden by subclasses
    def _local(self, u):
        raise NotImplementedError

    def _local_d1(self, u):
        raise NotImplementedError

    def _local_d2(self, u):
        raise NotImplementedError

    def params(self) -> dict:
        """Shape parameters, used for serialization and the CLI."""
        return {}

    # -- frame helpers
    def _embed(self, xy, offset):
        out = np.multiply.outer(xy[0], self.x_axis) + np.multiply.outer(xy[1], self._e2)
        return out + offset if offset is not None else out

    def _check(self, u):
        u_arr = np.asarray(u, dtype=float)
        lo, hi = self.domain
        if not np.all(np.isfinite(u_arr)):
            raise DomainError(f"non-finite parameter {u}")
        if np.any(u_arr < lo) or np.any(u_arr > hi):
            raise DomainError(f"parameter {u} outside domain [{lo}, {hi}]")
        return u_arr

    def contains(self, u: float) -> bool:
        return self.domain[0] <= u <= self.domain[1]

    def with_domain(self, u_min: float, u_max: float) -> "PlanarCurve":
        return dataclasses.replace(self, domain=(u_min, u_max))

    @cached_property
    def scale(self) -> float:
        """Characteristic length used for relative tolerances."""
        pts = self.points(np.linspace(*self.domain, 65))
        return float(max(1.0, np.max(np.linalg.norm(pts, axis=1))))

    # -- public geometry
    def evaluate(self, u) -> np.ndarray:
        u = self._check(u)
        return self._embed(self._local(u), self.plane_point)

    def points(self, us) -> np.ndarray:
        """Vectorized ``evaluate`` returning shape ``(len(us), 3)``."""
        return self.evaluate(np.asarray(us, dtype=float))

    def derivative(self, u) -> np.ndarray:
        u = self._check(u)
        return self._embed(self._local_d1(u), None)

    def second_derivative(self, u) -> np.ndarray:
        u = self._check(u)
        return self._embed(self._local_d2(u), None)

    def speed(self, u):
        u = self._check(u)
        d1 = self._local_d1(u)
        return np.hypot(d1[0], d1[1])

    def tangent(self, u) -> np.ndarray:
        d = self.derivative(u)
        norm = float(np.linalg.norm(d))
        if norm <= 1e-14 * self.scale:
            raise DegenerateCurveError(f"dR/du vanishes at u={u}")
        return d / norm

    def curvature(self, u):
        """Unsigned curvature ``|x'y'' - y'x''| / |R'|^3``."""
        u = self._check(u)
        d1 = self._local_d1(u)
        d2 = self._local_d2(u)
        sp = np.hypot(d1[0], d1[1])
        k = np.abs(d1[0] * d2[1] - d1[1] * d2[0]) / sp**3
        return float(k) if np.ndim(k) == 0 else k

    def arc_length(self, u0: float, u1: float) -> float:
        """Signed arc length from ``u0`` to ``u1``."""
        self._check([u0, u1])
        if u0 == u1:
            return 0.0
        val, _ = integrate.quad(lambda t: float(self.speed(t)), u0, u1,
                                epsabs=1e-14, epsrel=1e-13, limit=200)
        return val

    def plane_residual(self, p) -> float:
        """Signed distance of ``p`` from the curve's plane."""
        return float(np.dot(np.asarray(p) - self.plane_point, self.plane_normal))

    def max_curvature(self, u0: float, u1: float, samples: int = 4001) -> float:
        """Maximum curvature over ``[u0, u1]`` by dense sampling."""
        us = np.linspace(min(u0, u1), max(u0, u1), samples)
        return float(np.max(self.curvature(us)))

    def distance(self, points, samples: int = 4096) -> np.ndarray:
        """Distance from each point to the curve over its domain.

        Nearest sample on a dense grid, then Newton on ``(R(u) - P) . R'(u) = 0``.
        """
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        lo, hi = self.domain
        grid = np.linspace(lo, hi, samples)
        curve_pts = self.points(grid)
        best = np.empty(len(pts))
        for i0 in range(0, len(pts), 256):
            chunk = pts[i0:i0 + 256]
            d2 = np.sum((chunk[:, None, :] - curve_pts[None, :, :]) ** 2, axis=2)
            best[i0:i0 + 256] = grid[np.argmin(d2, axis=1)]
        u = best
        for _ in range(8):
            diff = self.points(u) - pts
            d1 = self.derivative(u)
            d2 = self.second_derivative(u)
            g = np.einsum("ij,ij->i", diff, d1)
            gp = np.einsum("ij,ij->i", d1, d1) + np.einsum("ij,ij->i", diff, d2)
            u = np.clip(u - g / gp, lo, hi)
        return np.linalg.norm(self.points(u) - pts, axis=1)

    def describe(self) -> str:
        args = ",".join(f"{v:g}" for v in self.params().values())
        return f"{self.kind}:{args}" if args else self.kind


@dataclass(frozen=True, eq=False)
class Circle(PlanarCurve):
    """Circle of ``radius`` centred on ``plane_point``; ``u`` is the polar angle."""

    radius: float = 1.0
    periodic = True
    kind = "circle"

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        super().__post_init__()

    def params(self):
        return {"radius": self.radius}

    def _local(self, u):
        return np.array([self.radius * np.cos(u), self.radius * np.sin(u)])

    def _local_d1(self, u):
        return np.array([-self.radius * np.sin(u), self.radius * np.cos(u)])

    def _local_d2(self, u):
        return np.array([-self.radius * np.cos(u), -self.radius * np.sin(u)])


@dataclass(frozen=True, eq=False)
class EllipseCenter(PlanarCurve):
    """Ellipse ``(a cos u, b sin u)`` centred on ``plane_point`` (Hooke's case)."""

    a: float = 1.0
    b: float = 1.0
    periodic = True
    kind = "ellipse-center"

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise ValueError("semi-axes must be positive")
        super().__post_init__()

    def params(self):
        return {"a": self.a, "b": self.b}

    def _local(self, u):
        return np.array([self.a * np.cos(u), self.b * np.sin(u)])

    def _local_d1(self, u):
        return np.array([-self.a * np.sin(u), self.b * np.cos(u)])

    def _local_d2(self, u):
        return np.array([-self.a * np.cos(u), -self.b * np.sin(u)])


@dataclass(frozen=True, eq=False)
class EllipseFocus(PlanarCurve):
    """Ellipse with a focus at ``plane_point`` (Kepler's case).

    ``u`` is the true anomaly measured from perihelion, which sits on the
    positive ``x_axis``: ``r(u) = a(1-e^2) / (1 + e cos u)``.
    """

    a: float = 1.0
    e: float = 0.0
    periodic = True
    kind = "ellipse-focus"

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError("semi-major axis must be positive")
        if not 0.0 <= self.e < 1.0:
            raise ValueError("eccentricity must lie in [0, 1)")
        super().__post_init__()

    def params(self):
        return {"a": self.a, "e": self.e}

    @property
    def semi_latus_rectum(self) -> float:
        return self.a * (1.0 - self.e**2)

    def _radial(self, u):
        p, e = self.semi_latus_rectum, self.e
        g = 1.0 + e * np.cos(u)
        g1 = -e * np.sin(u)
        g2 = -e * np.cos(u)
        r = p / g
        r1 = -p * g1 / g**2
        r2 = -p * g2 / g**2 + 2.0 * p * g1**2 / g**3
        return r, r1, r2

    def _local(self, u):
        r, _, _ = self._radial(u)
        return np.array([r * np.cos(u), r * np.sin(u)])

    def _local_d1(self, u):
        r, r1, _ = self._radial(u)
        c, s = np.cos(u), np.sin(u)
        return np.array([r1 * c - r * s, r1 * s + r * c])

    def _local_d2(self, u):
        r, r1, r2 = self._radial(u)
        c, s = np.cos(u), np.sin(u)
        return np.array([r2 * c - 2.0 * r1 * s - r * c,
                         r2 * s + 2.0 * r1 * c - r * s])


@dataclass(frozen=True, eq=False)
class Segment(PlanarCurve):
    """Straight line ``plane_point + u * x_axis``; the zero-curvature limit."""

    domain: tuple[float, float] = (-1.0, 1.0)
    kind = "segment"

    def _local(self, u):
        u = np.asarray(u, dtype=float)
        return np.array([u, np.zeros_like(u)])

    def _local_d1(self, u):
        u = np.asarray(u, dtype=float)
        return np.array([np.ones_like(u), np.zeros_like(u)])

    def _local_d2(self, u):
        u = np.asarray(u, dtype=float)
        return np.array([np.zeros_like(u), np.zeros_like(u)])


@dataclass(frozen=True, eq=False)
class CustomSampled(PlanarCurve):
    """Curve through a table of sampled points, interpolated by a cubic spline.

    The table must be planar; points are projected onto the best-fit plane
    and splined in that plane's 2D frame. A table whose first and last
    points coincide is treated as closed and splined periodically.
    """

    table: np.ndarray = field(default_factory=lambda: np.zeros((0, 4)))
    kind = "sampled"

    def __post_init__(self):
        table = np.asarray(self.table, dtype=float)
        if table.ndim != 2 or table.shape[1] != 4 or table.shape[0] < 4:
            raise ValueError("sampled curve needs at least 4 rows of (u, x, y, z)")
        if not np.all(np.isfinite(table)):
            raise ValueError("sampled curve contains non-finite values")
        us, pts = table[:, 0], table[:, 1:]
        if np.any(np.diff(us) <= 0):
            raise ValueError("sampled parameter u must be strictly increasing")
        centroid = pts.mean(axis=0)
        _, sing, vt = np.linalg.svd(pts - centroid)
        normal = vt[2]
        scale = max(1.0, float(np.max(np.linalg.norm(pts, axis=1))))
        off_plane = np.abs((pts - centroid) @ normal)
        if np.max(off_plane) > 1e-9 * scale:
            raise DegenerateCurveError(
                f"sampled points are not planar (max offset {np.max(off_plane):.3e})")
        object.__setattr__(self, "table", table)
        object.__setattr__(self, "domain", (float(us[0]), float(us[-1])))
        object.__setattr__(self, "plane_point", centroid)
        object.__setattr__(self, "plane_normal", normal)
        object.__setattr__(self, "x_axis", vt[0])
        super().__post_init__()
        local = np.column_stack([(pts - centroid) @ self.x_axis, (pts - centroid) @ self._e2])
        closed = np.allclose(pts[0], pts[-1], rtol=0.0, atol=1e-12 * scale)
        if closed:
            local[-1] = local[0]
        spline = interpolate.CubicSpline(us, local, axis=0,
                                         bc_type="periodic" if closed else "not-a-knot")
        object.__setattr__(self, "_spline", spline)
        object.__setattr__(self, "closed", closed)

    @classmethod
    def from_csv(cls, path) -> "CustomSampled":
        """Load a table with header ``u,x,y,z``."""
        with open(Path(path), newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["u", "x", "y", "z"]:
                raise ValueError(f"{path}: expected header u,x,y,z")
            rows = [[float(r[k]) for k in ("u", "x", "y", "z")] for r in reader]
        return cls(table=np.array(rows))

    def _local(self, u):
        return np.moveaxis(self._spline(u), -1, 0)

    def _local_d1(self, u):
        return np.moveaxis(self._spline(u, 1), -1, 0)

    def _local_d2(self, u):
        return np.moveaxis(self._spline(u, 2), -1, 0)

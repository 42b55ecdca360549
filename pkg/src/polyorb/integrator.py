"""Impulse-driven central-force polygon integrator.

Each step is an inertial drift followed by a velocity kick evaluated at the
*new* position and directed at the force centre::

    r' = r + v dt
    v' = v + a(r') dt

Because the kick is parallel to ``r' - S``, ``(r' - S) x v'`` equals
``(r - S) x v`` exactly in exact arithmetic: angular momentum about ``S``,
the swept triangle areas and the orbital plane are all conserved by the
discrete scheme itself. Energy is not.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import vector3

__all__ = [
    "SingularityError",
    "ForceLaw",
    "ImpulseTrajectory",
    "step",
    "integrate",
    "second_difference_deflection",
    "MAX_STORED_STATES",
]

MAX_STORED_STATES = 1_000_000
COLLISION_RADIUS = 1e-9  # relative to the initial distance from the centre


class SingularityError(ArithmeticError):
    """The trajectory reached (or passed through) the force centre."""

    def __init__(self, message, step_index=None):
        super().__init__(message)
        self.step_index = step_index


@dataclass(frozen=True)
class ForceLaw:
    """Attractive central force ``a = -coefficient * |d|**exponent * d/|d|``, ``d = r - S``."""

    coefficient: float
    exponent: float
    name: str = "power"

    def __post_init__(self):
        if not (math.isfinite(self.coefficient) and math.isfinite(self.exponent)):
            raise ValueError("force law parameters must be finite")
        if self.coefficient < 0:
            raise ValueError("force law must be attractive (coefficient >= 0)")

    @classmethod
    def linear(cls, k: float) -> "ForceLaw":
        return cls(k, 1.0, "linear")

    @classmethod
    def inverse_square(cls, gm: float) -> "ForceLaw":
        return cls(gm, -2.0, "inverse-square")

    @classmethod
    def power_law(cls, a: float, p: float) -> "ForceLaw":
        return cls(a, p, "power")

    def params(self) -> dict:
        if self.name == "power":
            return {"coefficient": self.coefficient, "exponent": self.exponent}
        return {"coefficient": self.coefficient}

    def describe(self) -> str:
        return f"{self.name}:" + ",".join(f"{v:.17g}" for v in self.params().values())

    def acceleration(self, r, center) -> np.ndarray:
        d = np.asarray(r, dtype=float) - np.asarray(center, dtype=float)
        dist = float(np.linalg.norm(d))
        if dist == 0.0:
            raise SingularityError("acceleration evaluated at the force centre")
        return -self.coefficient * dist ** (self.exponent - 1.0) * d

    def potential(self, dist):
        """Potential per unit mass, zero-referenced so that ``a = -grad V``."""
        dist = np.asarray(dist, dtype=float)
        p = self.exponent
        if p == -1.0:
            return self.coefficient * np.log(dist)
        return self.coefficient * dist ** (p + 1.0) / (p + 1.0)


@dataclass(frozen=True, eq=False)
class ImpulseTrajectory:
    """Stored states of an impulse integration.

    ``positions[i]`` and ``velocities[i]`` are the state after step
    ``indices[i]``. Below ``MAX_STORED_STATES`` every state is kept;
    beyond it only every ``stride``-th one, while the conservation
    diagnostics (``max_momentum_drift``, ``area2_min``/``area2_max``,
    ``max_plane_offset``) are still accumulated over every step.
    """

    positions: np.ndarray
    velocities: np.ndarray
    indices: np.ndarray
    dt: float
    n: int
    law: ForceLaw
    center: np.ndarray
    stride: int = 1
    max_momentum_drift: float = 0.0
    area2_min: float = 0.0
    area2_max: float = 0.0
    max_plane_offset: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def times(self) -> np.ndarray:
        return self.indices * self.dt

    @property
    def angular_momenta(self) -> np.ndarray:
        return np.cross(self.positions - self.center, self.velocities)

    @property
    def swept_areas2(self) -> np.ndarray:
        """``|(r_j - S) x (r_{j+1} - r_j)|`` between consecutive stored states."""
        if self.stride != 1:
            raise ValueError("per-step areas are unavailable for a decimated trajectory")
        rel = self.positions[:-1] - self.center
        return np.linalg.norm(np.cross(rel, np.diff(self.positions, axis=0)), axis=1)

    @property
    def energies(self) -> np.ndarray:
        dist = np.linalg.norm(self.positions - self.center, axis=1)
        return 0.5 * np.einsum("ij,ij->i", self.velocities, self.velocities) + self.law.potential(dist)

    def energy_drift(self) -> float:
        """Relative energy spread; a diagnostic only, the scheme does not conserve it."""
        e = self.energies
        return float(np.ptp(e) / max(abs(e[0]), np.finfo(float).tiny))

    def plane_normal(self) -> np.ndarray:
        l0 = self.angular_momenta[0]
        return l0 / np.linalg.norm(l0)

    def area_spread(self) -> float:
        """Relative spread ``(max - min) / min`` of per-step swept twice-areas."""
        return (self.area2_max - self.area2_min) / self.area2_min


def step(state, law: ForceLaw, center, dt: float):
    """Advance ``(r, v)`` by one drift-then-kick step of length ``dt``."""
    (x, y, z), (vx, vy, vz) = (map(float, c) for c in state)
    sx, sy, sz = map(float, center)
    if not dt > 0:
        raise ValueError("dt must be positive")
    x += vx * dt
    y += vy * dt
    z += vz * dt
    rx, ry, rz = x - sx, y - sy, z - sz
    r2 = rx * rx + ry * ry + rz * rz
    if r2 == 0.0:
        raise SingularityError("step lands on the force centre")
    k = -law.coefficient * math.sqrt(r2) ** (law.exponent - 1.0) * dt
    return np.array([x, y, z]), np.array([vx + k * rx, vy + k * ry, vz + k * rz])


def integrate(r0, v0, law: ForceLaw, center=(0.0, 0.0, 0.0), T: float = 2 * math.pi,
              n: int = 1000) -> ImpulseTrajectory:
    """Run ``n`` equal steps of ``dt = T / n`` from ``(r0, v0)``.

    Raises:
        SingularityError: a drift segment passes within ``1e-9 |r0 - S|`` of
            the centre; ``step_index`` gives the offending step.
    """
    r0, v0, center = vector3(r0), vector3(v0), vector3(center)
    if int(n) != n or n < 1:
        raise ValueError(f"step count must be a positive integer, got {n}")
    n = int(n)
    if not (math.isfinite(T) and T > 0):
        raise ValueError("total time T must be positive")
    dt = T / n
    sx, sy, sz = (float(c) for c in center)
    x, y, z = (float(c) for c in r0)
    vx, vy, vz = (float(c) for c in v0)
    dist0 = math.sqrt((x - sx) ** 2 + (y - sy) ** 2 + (z - sz) ** 2)
    if dist0 == 0.0:
        raise SingularityError("initial position is the force centre", 0)
    hit2 = (COLLISION_RADIUS * dist0) ** 2

    stride = max(1, -(-(n + 1) // MAX_STORED_STATES))
    decimated = stride > 1
    store = []
    store_idx = []
    coef, pm1 = law.coefficient, law.exponent - 1.0
    append = store.append

    # in-loop diagnostics are only needed when states are dropped
    lx0 = (y - sy) * vz - (z - sz) * vy
    ly0 = (z - sz) * vx - (x - sx) * vz
    lz0 = (x - sx) * vy - (y - sy) * vx
    lnorm0 = math.sqrt(lx0 * lx0 + ly0 * ly0 + lz0 * lz0)
    nx, ny, nz = ((lx0 / lnorm0, ly0 / lnorm0, lz0 / lnorm0) if lnorm0 > 0 else (0.0, 0.0, 0.0))
    max_drift2 = 0.0
    a_min, a_max = math.inf, 0.0
    max_off = 0.0

    append((x, y, z, vx, vy, vz))
    store_idx.append(0)
    for j in range(1, n + 1):
        dx, dy, dz = vx * dt, vy * dt, vz * dt
        # closest approach of the drift segment to the centre
        rx, ry, rz = x - sx, y - sy, z - sz
        seg2 = dx * dx + dy * dy + dz * dz
        proj = -(rx * dx + ry * dy + rz * dz)
        if 0.0 < proj < seg2:
            cx, cy, cz = ry * dz - rz * dy, rz * dx - rx * dz, rx * dy - ry * dx
            if (cx * cx + cy * cy + cz * cz) <= hit2 * seg2:
                raise SingularityError(f"trajectory passes through the centre at step {j}", j)
        if decimated:
            cx, cy, cz = ry * dz - rz * dy, rz * dx - rx * dz, rx * dy - ry * dx
            area2 = math.sqrt(cx * cx + cy * cy + cz * cz)
            a_min = min(a_min, area2)
            a_max = max(a_max, area2)
        x += dx
        y += dy
        z += dz
        rx, ry, rz = x - sx, y - sy, z - sz
        r2 = rx * rx + ry * ry + rz * rz
        if r2 <= hit2:
            raise SingularityError(f"trajectory reaches the centre at step {j}", j)
        k = -coef * math.sqrt(r2) ** pm1 * dt
        vx += k * rx
        vy += k * ry
        vz += k * rz
        if decimated:
            ex = ry * vz - rz * vy - lx0
            ey = rz * vx - rx * vz - ly0
            ez = rx * vy - ry * vx - lz0
            max_drift2 = max(max_drift2, ex * ex + ey * ey + ez * ez)
            max_off = max(max_off, abs((x - r0[0]) * nx + (y - r0[1]) * ny + (z - r0[2]) * nz))
            if j % stride == 0 or j == n:
                append((x, y, z, vx, vy, vz))
                store_idx.append(j)
        else:
            append((x, y, z, vx, vy, vz))

    arr = np.array(store)
    idx = np.array(store_idx if decimated else np.arange(n + 1))
    traj = ImpulseTrajectory(arr[:, :3], arr[:, 3:], idx, dt, n, law, center, stride,
                             meta={"T": T})
    if not decimated:
        lm = traj.angular_momenta
        max_drift2 = float(np.max(np.sum((lm - lm[0]) ** 2, axis=1)))
        areas = traj.swept_areas2
        a_min, a_max = float(areas.min()), float(areas.max())
        if lnorm0 > 0:
            max_off = float(np.max(np.abs((traj.positions - r0) @ np.array([nx, ny, nz]))))
    drift = math.sqrt(max_drift2) / lnorm0 if lnorm0 > 0 else math.sqrt(max_drift2)
    object.__setattr__(traj, "max_momentum_drift", drift)
    object.__setattr__(traj, "area2_min", a_min)
    object.__setattr__(traj, "area2_max", a_max)
    object.__setattr__(traj, "max_plane_offset", max_off)
    return traj


def second_difference_deflection(traj: ImpulseTrajectory, j: int) -> np.ndarray:
    """``r_{j+1} + r_{j-1} - 2 r_j``; equals ``a(r_j) dt^2`` for this scheme."""
    if traj.stride != 1:
        raise ValueError("second differences need an undecimated trajectory")
    if not 1 <= j <= traj.n - 1:
        raise IndexError(f"j={j} outside 1..{traj.n - 1}")
    p = traj.positions
    return (p[j + 1] - p[j]) - (p[j] - p[j - 1])

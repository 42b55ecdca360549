"""Polygonal constructions and impulse integration for central-force orbits."""

from .construction import PolygonOrbit, Termination, construct, coverage_length, next_vertex
from .geometry import Circle, CustomSampled, EllipseCenter, EllipseFocus, Segment, triangle_area2, vector3
from .integrator import ForceLaw, ImpulseTrajectory, integrate, second_difference_deflection, step

__version__ = "0.1.0"

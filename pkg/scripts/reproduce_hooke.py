#!/usr/bin/env python3
"""Draw an orbit under a linear central force with the impulse integrator.

Starts at (1, 0, 0) with velocity (0, 0.5, 0), so the exact orbit is the
centred ellipse with semi-axes 1 and 0.5. Prints the largest distance of
the trajectory points from that ellipse for each step count and the fitted
order, and optionally writes the finest trajectory as plot columns.
"""

import argparse
import math

import numpy as np

from polyorb import io as pio
from polyorb.analysis import fit_order
from polyorb.geometry import EllipseCenter
from polyorb.integrator import ForceLaw, integrate


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--n", default="200,400,800,1600")
    ap.add_argument("--plot", help="write t x y of the finest run to this file")
    args = ap.parse_args()
    ns = [int(v) for v in args.n.split(",")]

    ellipse = EllipseCenter(a=1.0, b=0.5)
    law = ForceLaw.linear(1.0)
    dist = []
    for n in ns:
        traj = integrate([1.0, 0.0, 0.0], [0.0, 0.5, 0.0], law, T=2 * math.pi, n=n)
        d = float(np.max(ellipse.distance(traj.positions)))
        dist.append(d)
        print(f"n={n:6d}  max distance {d:.6e}  area spread {traj.area_spread():.2e}")
    fit = fit_order(ns, dist)
    print(f"order {-fit.slope:.4f} +/- {fit.slope_ci:.2g}")
    if args.plot:
        p = traj.positions
        pio.write_text(args.plot, pio.columns_text(["t", "x", "y"], [traj.times, p[:, 0], p[:, 1]]))


if __name__ == "__main__":
    main()

#!/usr/bin/env python3
"""Run the standard convergence studies and write one JSON report per study.

    python3 scripts/run_studies.py --out results/

Set POLYORB_THREADS to fan the n sweeps out over processes.
"""

import argparse
import math
from pathlib import Path

import numpy as np

from polyorb import io as pio
from polyorb.analysis import bound_study, chord_decay_study, coverage_convergence
from polyorb.force_measures import ratio_convergence
from polyorb.geometry import Circle, EllipseCenter, EllipseFocus

ORIGIN = np.zeros(3)

CURVES = {
    "circle": Circle(radius=1.0),
    "focus": EllipseFocus(a=1.0, e=0.5),
    "center": EllipseCenter(a=2.0, b=1.0),
}


def study_length(name, curve):
    if name == "circle":
        return 2 * math.pi
    return 0.5 * curve.arc_length(0.0, 2 * math.pi)


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--out", default="results", help="output directory")
    ap.add_argument("--n", default="16,32,64,128,256", help="comma-separated n values")
    args = ap.parse_args()
    ns = [int(v) for v in args.n.split(",")]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    for name, curve in CURVES.items():
        L = study_length(name, curve)
        for study, fn in (("chords", chord_decay_study), ("coverage", coverage_convergence),
                          ("bound", bound_study)):
            report = fn(curve, ORIGIN, 0.0, L, ns)
            pio.write_text(out / f"{study}_{name}.json", pio.dumps(report.to_dict()))
            print(f"{study:9s} {name:7s} slope {report.log_log_slope:+.4f}  "
                  f"limit {report.extrapolated_limit:.10g}")

    for e in (0.0, 0.3, 0.6):
        curve = Circle(radius=1.0) if e == 0.0 else EllipseFocus(a=1.0, e=e)
        for u in (0.0, 1.0, 2.5, 4.0):
            report = ratio_convergence(curve, ORIGIN, u, [64, 128, 256, 512])
            pio.write_text(out / f"ratio_e{e}_u{u}.json", pio.dumps(report.to_dict()))
            print(f"ratio     e={e:<4} u={u:<4} limit {report.extrapolated_limit:.10f}")


if __name__ == "__main__":
    main()
